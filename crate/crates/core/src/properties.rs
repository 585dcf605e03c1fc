//! Property tests across modules.

use proptest::prelude::*;

use crate::calculus::{jump_integral, quadratic_variation, stochastic_integral, SampledIntegrand};
use crate::csv_io::{path_to_string, read_path};
use crate::exp_log::{
    check_membership, jump_measure_pushforward, phi, reciprocal_companion, stoch_exp_formula, stoch_exp_recursive,
    stoch_log, MembershipClass,
};
use crate::generators::{generate, generate_member, GeneratorKind, GeneratorSpec, JumpLaw, QvChannel};
use crate::harness::{channel_error, reciprocal_product_error, roundtrip_errors, transport_functions};
use crate::path_model::{CadlagPath, HitKind, IntervalEnd, Mode};
use crate::calculus::sign_change_count;
use crate::seed::derive_seed;

fn grid(dts: &[f64]) -> Vec<f64> {
    let mut t = 0.0;
    dts.iter()
        .map(|dt| {
            t += dt;
            t
        })
        .collect()
}

/// Pure-jump members of the logarithm class: jumps in `(−1, 3)`, an
/// occasional exact −1, constant afterwards.
fn l_path() -> impl Strategy<Value = CadlagPath> {
    prop::collection::vec((0.01..1.0f64, -0.999..3.0f64, prop::bool::weighted(0.05)), 0..50).prop_map(|steps| {
        let times = grid(&steps.iter().map(|s| s.0).collect::<Vec<_>>());
        let mut dead = false;
        let jumps = steps
            .iter()
            .map(|&(_, j, kill)| {
                if dead {
                    0.0
                } else if kill {
                    dead = true;
                    -1.0
                } else {
                    j
                }
            })
            .collect();
        CadlagPath::pure_jump(0.0, times, jumps).unwrap()
    })
}

/// Pure-jump paths with arbitrary jumps, including below −1.
fn any_pure_jump() -> impl Strategy<Value = CadlagPath> {
    (-1.0..1.0f64, prop::collection::vec((0.01..1.0f64, -3.0..3.0f64), 0..40)).prop_map(|(x0, steps)| {
        let times = grid(&steps.iter().map(|s| s.0).collect::<Vec<_>>());
        CadlagPath::pure_jump(x0, times, steps.iter().map(|s| s.1).collect()).unwrap()
    })
}

/// Grid paths with a small continuous part and sparse jumps above −1.
fn grid_path() -> impl Strategy<Value = CadlagPath> {
    prop::collection::vec(
        (0.001..0.01f64, -1.0..1.0f64, prop::bool::weighted(0.1), -0.9..1.5f64, 0.0..2.0f64),
        1..200,
    )
    .prop_map(|steps| {
        let times = grid(&steps.iter().map(|s| s.0).collect::<Vec<_>>());
        let c = steps.iter().map(|s| s.1 * s.0.sqrt()).collect();
        let j = steps.iter().map(|s| if s.2 { s.3 } else { 0.0 }).collect();
        let q = steps.iter().map(|s| s.4 * s.0).collect();
        CadlagPath::new(0.0, times, c, j, q, IntervalEnd::Unbounded, Mode::GridApprox).unwrap()
    })
}

/// Nonnegative pure-jump paths from 1, absorbed at zero.
fn z_path() -> impl Strategy<Value = CadlagPath> {
    prop::collection::vec((0.01..1.0f64, 0.0..3.0f64, prop::bool::weighted(0.05)), 0..50).prop_map(|steps| {
        let times = grid(&steps.iter().map(|s| s.0).collect::<Vec<_>>());
        let mut x = 1.0_f64;
        let jumps = steps
            .iter()
            .map(|&(_, r, kill)| {
                let j = if x == 0.0 {
                    0.0
                } else if kill {
                    -x
                } else {
                    x * (r - 1.0)
                };
                x += j;
                j
            })
            .collect();
        CadlagPath::pure_jump(1.0, times, jumps).unwrap()
    })
}

fn with_interval_end(p: CadlagPath, cut: usize) -> CadlagPath {
    let end = if p.steps() == 0 || cut == 0 { IntervalEnd::Unbounded } else { IntervalEnd::AtIndex(1 + cut % p.steps()) };
    CadlagPath::new(
        p.initial_value(),
        p.times().to_vec(),
        p.cont_increments().to_vec(),
        p.jumps().to_vec(),
        p.cont_qv_increments().to_vec(),
        end,
        p.mode(),
    )
    .unwrap()
}

fn ulps(a: f64, b: f64) -> f64 {
    (a - b).abs() / (f64::EPSILON * b.abs().max(f64::MIN_POSITIVE))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn running_infimum_is_nonincreasing(p in any_pure_jump()) {
        let inf = p.running_infimum_abs();
        prop_assert!(inf[0] <= p.initial_value().abs());
        prop_assert!(inf.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_hit_is_monotone_in_threshold(p in z_path(), a in 0.0..0.5f64, b in 0.0..0.5f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at = |t: f64| p.detect_zero_hit(t).tau0_index.unwrap_or(usize::MAX);
        prop_assert!(at(hi) <= at(lo));
    }

    #[test]
    fn announcing_sequence_stays_below_hit(p in prop_oneof![l_path(), any_pure_jump()], theta in 1e-4..0.3f64) {
        let z = stoch_exp_formula(&p);
        let report = z.detect_zero_hit(theta);
        let sigmas: Vec<f64> = (0..12).map(|e| z.announcing_sequence(&report, 1 << e)).collect();
        prop_assert!(sigmas.windows(2).all(|w| w[0] <= w[1]), "{:?}", sigmas);
        if let Some(k0) = report.continuous_hit() {
            prop_assert!(sigmas.iter().all(|&s| s < z.time_at(k0)));
        }
        if report.kind != HitKind::Continuous {
            for (e, s) in sigmas.iter().enumerate() {
                prop_assert!(*s <= f64::from(1u32 << e).min(z.horizon()));
            }
        }
    }

    #[test]
    fn stop_at_is_idempotent(p in grid_path(), k in 0usize..250) {
        let once = p.stop_at(k);
        prop_assert_eq!(once.stop_at(k), once.clone());
        if k >= p.steps() {
            prop_assert_eq!(once, p);
        }
    }

    #[test]
    fn values_are_left_limits_plus_jumps(p in grid_path(), cut in 0usize..300) {
        let p = with_interval_end(p, cut);
        for k in 1..=p.last_index() {
            prop_assert_eq!(p.value_at(k).unwrap(), p.left_limit_at(k).unwrap() + p.jump(k));
        }
        prop_assert!(p.value_at(p.last_index() + 1).is_err());
    }

    #[test]
    fn stochastic_integral_is_bilinear(
        p in grid_path(),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let n = p.steps();
        let h = |s: u64| {
            let xs: Vec<f64> = (0..2 * n).map(|i| ((derive_seed(s, i as u64) >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0).collect();
            SampledIntegrand::new(xs[..n].to_vec(), xs[n..].to_vec()).unwrap()
        };
        let (h1, h2) = (h(seed), h(seed ^ 1));
        let mixed = stochastic_integral(&h1.combine(a, &h2, b), &p).unwrap();
        let i1 = stochastic_integral(&h1, &p).unwrap();
        let i2 = stochastic_integral(&h2, &p).unwrap();
        for k in 1..=n {
            let lhs = [mixed.cont_increment(k), mixed.jump(k)];
            let rhs = [a * i1.cont_increment(k) + b * i2.cont_increment(k), a * i1.jump(k) + b * i2.jump(k)];
            for (l, r) in lhs.iter().zip(rhs) {
                prop_assert!((l - r).abs() <= 1e-14 * (1.0 + r.abs()), "{} vs {}", l, r);
            }
        }
        let scaled = stochastic_integral(&a, &p).unwrap();
        let unit = stochastic_integral(&1.0, &p).unwrap();
        prop_assert_eq!(unit.cont_increments(), p.cont_increments());
        prop_assert_eq!(unit.jumps(), p.jumps());
        for k in 1..=n {
            prop_assert!((scaled.cont_increment(k) - a * unit.cont_increment(k)).abs() <= 1e-15 * (1.0 + unit.cont_increment(k).abs()));
        }
    }

    #[test]
    fn quadratic_variation_splits(p in grid_path()) {
        let qv = quadratic_variation(&p);
        let squares = jump_integral(&|_t: f64, x: f64| x * x, &p);
        prop_assert!(qv.total.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..qv.total.len() {
            let d = qv.total[k] - qv.continuous[k];
            prop_assert!((d - squares[k]).abs() <= 1e-13 * (1.0 + qv.total[k]));
        }
        // [H·X] = (H(t−)x)²*μ^X + Σ H(t_{k−1})² q_k with H = Z for Z = E(X).
        let z = stoch_exp_recursive(&p);
        let h = SampledIntegrand::of_path(&z, |v| v);
        let hx = stochastic_integral(&h, &p).unwrap();
        let lhs = quadratic_variation(&hx).final_total();
        let mut rhs = 0.0;
        for k in 1..=p.steps() {
            let zl = z.left_limit_at(k).unwrap();
            let zp = z.value_at(k - 1).unwrap();
            rhs += zp * zp * p.cont_qv_increment(k) + (zl * p.jump(k)).powi(2);
        }
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn phi_is_an_involution_on_small_inputs(x in -1.0..=1.0f64) {
        prop_assume!(x > -1.0);
        let back = phi(phi(x).unwrap()).unwrap();
        prop_assert!(ulps(back, x) <= 4.0 || back == x, "x {} back {}", x, back);
    }

    #[test]
    fn phi_is_an_involution_up_to_resolution_on_large_inputs(x in 1.0..=1e6f64) {
        let back = phi(phi(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x) * (1.0 + x));
    }

    #[test]
    fn pure_jump_roundtrips(p in l_path()) {
        prop_assert!(check_membership(&p, MembershipClass::L).member);
        prop_assert!(roundtrip_errors(&p, stoch_exp_recursive).max() <= 1e-12);
        prop_assert!(roundtrip_errors(&p, stoch_exp_formula).max() <= 1e-12);
        let gap = channel_error(&stoch_exp_formula(&p), &stoch_exp_recursive(&p));
        prop_assert!(gap <= 1e-12, "evaluators differ by {}", gap);
    }

    #[test]
    fn exp_of_log_recovers_z(z in z_path()) {
        prop_assert!(check_membership(&z, MembershipClass::Z).member);
        let report = z.detect_zero_hit(0.0);
        let x = stoch_log(&z, &report).unwrap();
        prop_assert!(check_membership(&x, MembershipClass::L).member);
        prop_assert!(channel_error(&stoch_exp_recursive(&x), &z) <= 1e-12);
    }

    #[test]
    fn grid_roundtrip(p in grid_path()) {
        prop_assert!(roundtrip_errors(&p, stoch_exp_recursive).max() <= 1e-10);
    }

    #[test]
    fn reciprocal_product_is_one(p in prop_oneof![any_pure_jump(), grid_path()]) {
        prop_assert!(reciprocal_product_error(&p) <= 1e-10);
    }

    #[test]
    fn pushforward_sides_agree_exactly(p in any_pure_jump()) {
        let y = reciprocal_companion(&p);
        for (_, g) in transport_functions() {
            let pf = jump_measure_pushforward(&g, &p, &y).unwrap();
            prop_assert_eq!(pf.max_abs_gap(), 0.0);
        }
    }

    #[test]
    fn sign_follows_jumps_below_minus_one(p in any_pure_jump()) {
        let z = stoch_exp_formula(&p);
        let counts = sign_change_count(&p);
        let mut dead = false;
        for k in 0..=p.steps() {
            dead |= p.jump(k) == -1.0;
            let v = z.values()[k];
            if dead {
                prop_assert_eq!(v, 0.0);
            } else {
                prop_assert_eq!(v < 0.0, counts[k] % 2 == 1);
            }
        }
        prop_assert_eq!(z.values()[0], p.initial_value().exp());
    }

    #[test]
    fn exponential_stays_zero_after_a_minus_one_jump(p in l_path()) {
        let kill = p.jumps().iter().position(|&j| j == -1.0);
        for z in [stoch_exp_formula(&p), stoch_exp_recursive(&p)] {
            match kill {
                Some(k) => prop_assert!(z.values()[k + 1..].iter().all(|&v| v == 0.0)),
                None => prop_assert!(z.values().iter().all(|&v| v > 0.0)),
            }
        }
    }

    #[test]
    fn csv_roundtrip_is_lossless(p in prop_oneof![any_pure_jump(), grid_path()], cut in 0usize..300) {
        let p = with_interval_end(p, cut);
        let back = read_path(path_to_string(&p).as_bytes()).unwrap();
        prop_assert_eq!(back.times(), p.times());
        prop_assert_eq!(back.jumps(), p.jumps());
        prop_assert_eq!(back.cont_increments(), p.cont_increments());
        prop_assert_eq!(back.values(), p.values());
        prop_assert_eq!(back.interval_end(), p.interval_end());
    }
}

fn any_spec() -> impl Strategy<Value = GeneratorSpec> {
    let law = prop_oneof![
        (-0.99..0.0f64, 0.1..3.0f64).prop_map(|(low, w)| JumpLaw::Uniform { low, high: low + w }),
        (-3.0..3.0f64, -3.0..3.0f64, 0.0..=1.0f64).prop_map(|(a, b, p_a)| JumpLaw::TwoPoint { a, b, p_a }),
        (-0.99..1.0f64, 0.1..5.0f64).prop_map(|(shift, rate)| JumpLaw::ShiftedExponential { shift, rate }),
    ];
    let kind = prop_oneof![
        Just(GeneratorKind::Brownian),
        Just(GeneratorKind::StoppedBrownian),
        Just(GeneratorKind::OneJump),
        any::<bool>().prop_map(|stopped| GeneratorKind::Walk { stopped }),
        (1usize..300).prop_map(|n_max| GeneratorKind::TimeChangedWalk { n_max }),
        (0.1..30.0f64, law).prop_map(|(rate, law)| GeneratorKind::CompoundPoisson { rate, law }),
        (0.0..=1.0f64).prop_map(|kill_probability| GeneratorKind::RandomL { kill_probability }),
    ];
    (kind, 1.0..50.0f64, 1usize..500, any::<u64>(), any::<bool>(), any::<bool>()).prop_map(
        |(kind, horizon, steps, seed, realized, grid)| {
            let mut spec = GeneratorSpec::new(kind, horizon, steps).with_seed(seed);
            if realized {
                spec = spec.with_qv(QvChannel::Realized);
            }
            if grid {
                spec = spec.with_mode(Mode::GridApprox);
            }
            spec
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generators_emit_valid_paths(spec in any_spec()) {
        let p = generate(&spec).unwrap();
        let rebuilt = CadlagPath::with_values(
            p.initial_value(),
            p.times().to_vec(),
            p.cont_increments().to_vec(),
            p.jumps().to_vec(),
            p.cont_qv_increments().to_vec(),
            p.values().to_vec(),
            p.left_limits().to_vec(),
            p.interval_end(),
            p.mode(),
        );
        prop_assert!(rebuilt.is_ok(), "{:?}", rebuilt);
        prop_assert_eq!(p.mode(), spec.effective_mode());
        prop_assert_eq!(generate(&spec).unwrap(), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ensemble_members_ignore_generation_order(master in any::<u64>(), order in Just((0u64..20).collect::<Vec<_>>()).prop_shuffle()) {
        let spec = GeneratorSpec::new(GeneratorKind::RandomL { kill_probability: 0.1 }, 1.0, 20);
        let forward: Vec<CadlagPath> = (0..20).map(|i| generate_member(&spec, master, i).unwrap()).collect();
        for i in order {
            prop_assert_eq!(&generate_member(&spec, master, i).unwrap(), &forward[i as usize]);
        }
    }
}
