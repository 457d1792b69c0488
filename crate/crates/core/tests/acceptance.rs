//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see
//! them). Tolerances and budgets are pinned in the asserts.

use std::time::{Duration, Instant};

use ia_workbench::cj;
use ia_workbench::dof;
use ia_workbench::feasibility::{self, DofDemand, RestartOutcome, SolveOptions, Verdict};
use ia_workbench::network::{ExtendedChannels, NetworkConfig, SpatialChannels};
use ia_workbench::separability;
use num_bigint::BigInt;
use num_rational::BigRational;

/// Prints the criterion verdict even when an assert unwinds.
struct Criterion {
    label: &'static str,
    armed: bool,
}

impl Criterion {
    fn new(label: &'static str) -> Self {
        Self { label, armed: true }
    }

    fn pass(mut self) {
        self.armed = false;
        println!("ACCEPTANCE {}: PASS", self.label);
    }
}

impl Drop for Criterion {
    fn drop(&mut self) {
        if self.armed {
            println!("ACCEPTANCE {}: FAIL", self.label);
        }
    }
}

fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

#[test]
fn criterion_1_monomial_basis_fidelity() {
    let criterion = Criterion::new("1 (monomial basis fidelity)");

    let started = Instant::now();
    let basis = cj::enumerate_monomials(3, 5);
    let elapsed = started.elapsed();

    let expected: [&[u32]; 10] = [
        &[1, 1, 1],
        &[1, 1, 2],
        &[1, 1, 3],
        &[1, 2, 1],
        &[1, 2, 2],
        &[1, 3, 1],
        &[2, 1, 1],
        &[2, 1, 2],
        &[2, 2, 1],
        &[3, 1, 1],
    ];
    assert_eq!(basis.len(), 10);
    for (monomial, want) in basis.monomials().iter().zip(expected) {
        assert_eq!(monomial.exponents(), want);
    }
    assert!(
        elapsed < Duration::from_millis(1),
        "enumeration took {elapsed:?}, budget 1 ms"
    );

    criterion.pass();
}

/// All multisets of `size` indices drawn from `0..=max` (nondecreasing
/// tuples), visited through a callback.
fn for_each_multiset(max: usize, size: usize, visit: &mut impl FnMut(&[usize])) {
    fn recurse(
        prefix: &mut Vec<usize>,
        lo: usize,
        max: usize,
        left: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if left == 0 {
            visit(prefix);
            return;
        }
        for next in lo..=max {
            prefix.push(next);
            recurse(prefix, next, max, left - 1, visit);
            prefix.pop();
        }
    }
    recurse(&mut Vec::with_capacity(size), 0, max, size, visit);
}

#[test]
fn criterion_2_lemma_multiset_uniqueness() {
    let criterion = Criterion::new("2 (lexicographic power uniqueness)");

    let started = Instant::now();
    let mut multisets_checked = 0u64;
    for arity in 1..=3usize {
        for m in arity..=6 {
            let basis = cj::enumerate_monomials(arity, m);
            let exponents: Vec<&[u32]> = basis
                .monomials()
                .iter()
                .map(|mono| mono.exponents())
                .collect();
            for power in 1..=3usize {
                for k in 0..exponents.len() {
                    let target: Vec<u32> = exponents[k].iter().map(|&e| e * power as u32).collect();
                    for_each_multiset(k, power, &mut |pick| {
                        multisets_checked += 1;
                        let mut sum = vec![0u32; arity];
                        for &idx in pick {
                            for (slot, &e) in sum.iter_mut().zip(exponents[idx]) {
                                *slot += e;
                            }
                        }
                        let trivial = pick.iter().all(|&idx| idx == k);
                        assert_eq!(
                            sum == target,
                            trivial,
                            "multiset {pick:?} reproduces the power of index {k} \
                             (arity {arity}, m {m}, power {power})"
                        );
                    });
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(
        multisets_checked > 10_000,
        "only {multisets_checked} multisets"
    );
    assert!(
        elapsed < Duration::from_secs(10),
        "exhaustive check took {elapsed:?}, budget 10 s"
    );

    criterion.pass();
}

#[test]
fn criterion_3_exact_alignment() {
    let criterion = Criterion::new("3 (exact alignment containment)");

    for (num_tx, num_rx, rx_antennas, m) in [(2, 2, 1, 2), (3, 2, 1, 3), (2, 3, 1, 4), (3, 2, 2, 8)]
    {
        let config = NetworkConfig::simo(num_tx, num_rx, rx_antennas).unwrap();
        let plan = separability::choose_extension_length(num_tx, num_rx, rx_antennas, m).unwrap();
        let channels = ExtendedChannels::draw(&config, plan.n, 2024).unwrap();
        for served in 0..num_rx {
            let signal = cj::build_beam_basis(&channels, served, m).unwrap();
            let interference = cj::build_interference_basis(&channels, served, m).unwrap();
            let report = cj::verify_alignment(&signal, &interference).unwrap();
            assert_eq!(
                report.checks,
                plan.interference_channels * plan.v_cols,
                "every (channel, column) pair must be checked"
            );
            assert!(
                report.pass(),
                "({num_tx},{num_rx},{rx_antennas},{m}) receiver {served}: \
                 {} misses",
                report.misses.len()
            );
        }
    }

    criterion.pass();
}

#[test]
fn criterion_4_separability_monte_carlo() {
    let criterion = Criterion::new("4 (separability Monte-Carlo)");

    let started = Instant::now();
    for (num_tx, num_rx, rx_antennas, m, seeds) in
        [(2, 2, 1, 2, 100), (3, 2, 1, 3, 100), (3, 2, 2, 8, 10)]
    {
        let config = NetworkConfig::simo(num_tx, num_rx, rx_antennas).unwrap();
        let mut passes = 0;
        for seed in 0..seeds {
            let report = separability::verify(&config, m, seed, 1e-8).unwrap();
            passes += usize::from(report.pass);
        }
        assert_eq!(
            passes, seeds as usize,
            "({num_tx},{num_rx},{rx_antennas},{m}): {passes}/{seeds} full rank"
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "campaign took {elapsed:?}, budget 2 min"
    );

    criterion.pass();
}

#[test]
fn criterion_5_step2_induction() {
    let criterion = Criterion::new("5 (row/column induction trace)");

    for (num_tx, num_rx, rx_antennas, m) in [(2, 2, 1, 2), (3, 2, 1, 3)] {
        let config = NetworkConfig::simo(num_tx, num_rx, rx_antennas).unwrap();
        let plan = separability::choose_extension_length(num_tx, num_rx, rx_antennas, m).unwrap();
        for seed in 0..20 {
            let channels = ExtendedChannels::draw(&config, plan.n, seed).unwrap();
            let bases = separability::build_bases(&channels, m).unwrap();
            // Returning Ok certifies the final matrix equals the direct
            // assembly; the trace must be full rank at every step.
            let trace = separability::step2_induction_trace(&channels, &bases, 1e-8).unwrap();
            assert_eq!(trace.steps.len(), (num_rx - 1) * plan.i_cols);
            assert!(
                trace.pass(),
                "({num_tx},{num_rx},{rx_antennas},{m}) seed {seed}: rank lost"
            );
        }
    }

    criterion.pass();
}

#[test]
fn criterion_6_dof_formulas() {
    let criterion = Criterion::new("6 (exact DoF formulas and scale invariance)");

    let started = Instant::now();
    assert_eq!(dof::mimo_x_dof(3, 3, 2), rational(18, 5));
    assert_eq!(dof::outer_bound_simo(3, 3, 1), rational(9, 5));
    for scale in 1..=8 {
        for num_tx in 2..=6u64 {
            for rx_antennas in 1..num_tx {
                for num_rx in 2..=6 {
                    let check = dof::scale_invariance_check(num_tx, num_rx, rx_antennas, scale);
                    assert!(
                        check.equal,
                        "scale invariance broken at (M={num_tx}, N={num_rx}, \
                         R={rx_antennas}, A={scale}): {} vs {}",
                        check.decomposed, check.scaled_base
                    );
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "formula sweep took {elapsed:?}, budget 1 s"
    );

    criterion.pass();
}

/// Independent counting oracle: enumerate every scalar equation and every
/// free reduced-filter entry, one by one.
fn enumerated_equations(demand: &DofDemand) -> u64 {
    let mut count = 0;
    for k in 0..demand.num_rx() {
        for i in 0..demand.num_tx() {
            for j in (0..demand.num_rx()).filter(|&j| j != k) {
                count += (demand.rx_total(k) * demand.streams(j, i)) as u64;
            }
        }
    }
    count
}

fn enumerated_variables(config: &NetworkConfig, demand: &DofDemand) -> u64 {
    let mut count = 0;
    for k in 0..demand.num_rx() {
        let own = demand.rx_total(k);
        count += ((config.rx_antennas(k) - own) * own) as u64;
    }
    for j in 0..demand.num_rx() {
        for i in 0..demand.num_tx() {
            let d = demand.streams(j, i);
            count += ((config.tx_antennas(i) - d) * d) as u64;
        }
    }
    count
}

#[test]
fn criterion_7_properness_boundaries() {
    let criterion = Criterion::new("7 (properness boundary cases)");

    let config = NetworkConfig::new(vec![2, 2], vec![3, 3]).unwrap();
    let demand = DofDemand::uniform(&config, 1).unwrap();
    let report = feasibility::properness_report(&config, &demand);
    assert_eq!((report.equations, report.variables), (8, 8));
    assert_eq!(report.symmetric_bound.unwrap(), rational(1, 1));

    for k in 2..=6usize {
        let config = NetworkConfig::new(vec![k; 2], vec![k + 1; k]).unwrap();
        let demand = DofDemand::uniform(&config, 1).unwrap();
        let report = feasibility::properness_report(&config, &demand);
        assert_eq!(
            report.equations, report.variables,
            "2x{k} boundary family must sit exactly on N_e = N_v"
        );
        assert_eq!(report.symmetric_bound.unwrap(), rational(1, 1));
    }

    // Counting matches the brute-force enumerator on every small instance
    // with N_e ≤ 12, including asymmetric demands.
    let mut instances = 0;
    for num_tx in 1..=2usize {
        for num_rx in 2..=3usize {
            for a in 1..=3usize {
                for b in 1..=3usize {
                    let config = NetworkConfig::new(vec![a; num_tx], vec![b; num_rx]).unwrap();
                    let cells = num_tx * num_rx;
                    for code in 0..3usize.pow(cells as u32) {
                        let mut streams = vec![vec![0usize; num_tx]; num_rx];
                        let mut value = code;
                        for cell in 0..cells {
                            streams[cell / num_tx][cell % num_tx] = value % 3;
                            value /= 3;
                        }
                        let Ok(demand) = DofDemand::new(&config, streams) else {
                            continue;
                        };
                        if feasibility::count_equations(&demand) > 12 {
                            continue;
                        }
                        assert_eq!(
                            feasibility::count_equations(&demand),
                            enumerated_equations(&demand)
                        );
                        assert_eq!(
                            feasibility::count_variables(&config, &demand),
                            enumerated_variables(&config, &demand)
                        );
                        instances += 1;
                    }
                }
            }
        }
    }
    assert!(instances > 100, "oracle covered only {instances} instances");

    criterion.pass();
}

#[test]
fn criterion_8_feasibility_evidence() {
    let criterion = Criterion::new("8 (solver feasibility evidence)");

    let options = SolveOptions::default();
    assert_eq!(options.restarts, 5);
    assert_eq!(options.leak_tol, 1e-9);

    // Proper and tight: at least one of five restarts must align.
    let started = Instant::now();
    let config = NetworkConfig::new(vec![2, 2], vec![3, 3]).unwrap();
    let demand = DofDemand::uniform(&config, 1).unwrap();
    let channels = SpatialChannels::draw(&config, 2024);
    let outcome = feasibility::solve_spatial_ia(&channels, &demand, &options).unwrap();
    let elapsed = started.elapsed();
    let converged = outcome
        .trace
        .restarts
        .iter()
        .filter(|r| matches!(r.outcome, RestartOutcome::Converged { .. }))
        .count();
    assert!(converged >= 1, "no restart reached the leakage tolerance");
    assert_eq!(outcome.verdict, Verdict::Feasible);
    assert!(outcome.final_leakage < 1e-9);
    assert!(outcome.trace.desired_rank_ok.iter().all(|&ok| ok));
    assert!(
        elapsed < Duration::from_secs(30),
        "proper solve took {elapsed:?}, budget 30 s"
    );

    // Improper: no restart may converge and every one must plateau well
    // above the tolerance.
    let config = NetworkConfig::new(vec![2, 2], vec![2, 2]).unwrap();
    let demand = DofDemand::uniform(&config, 1).unwrap();
    assert!(!feasibility::properness_report(&config, &demand).proper);
    let channels = SpatialChannels::draw(&config, 2024);
    let outcome = feasibility::solve_spatial_ia(&channels, &demand, &options).unwrap();
    assert_eq!(outcome.verdict, Verdict::Infeasible);
    for restart in &outcome.trace.restarts {
        assert!(
            matches!(restart.outcome, RestartOutcome::Plateaued { .. }),
            "restart {} did not plateau",
            restart.restart
        );
        assert!(
            restart.final_normalized() > 1e-4,
            "restart {} plateaued at {:.3e}, below the 1e-4 floor",
            restart.restart,
            restart.final_normalized()
        );
    }

    criterion.pass();
}

#[test]
fn criterion_9_achieved_fraction_trend() {
    let criterion = Criterion::new("9 (achieved fraction rises toward the limit)");

    let limit = rational(3, 2);
    let trend = dof::achieved_fraction_trend(3, 2, 1, 3).unwrap();
    assert_eq!(trend.len(), 3);
    for pair in trend.windows(2) {
        assert!(
            pair[0].value < pair[1].value,
            "fraction must increase strictly: {} then {}",
            pair[0].value,
            pair[1].value
        );
    }
    for entry in &trend {
        assert!(
            entry.value <= limit,
            "achieved {} exceeds the limit 3/2",
            entry.value
        );
    }

    criterion.pass();
}
