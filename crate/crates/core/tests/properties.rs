use std::f64::consts::PI;

use minimax_fir::autocorr::{lift_with_tolerance, AutocorrSequence};
use minimax_fir::certificate::count_alternations;
use minimax_fir::io::{format_filter, parse_filter};
use minimax_fir::par::Execution;
use minimax_fir::remez::{build_grid, design_zero_phase, BasisKind, RemezOptions, ZeroPhaseDesign};
use minimax_fir::spectrum::{magnitude_response_with, Band, BandSpec, CoeffDomain, FirFilter};
use num_complex::Complex64;
use proptest::prelude::*;

fn real_filter() -> impl Strategy<Value = FirFilter> {
    prop::collection::vec(-1.0f64..1.0, 2..24)
        .prop_filter("nonzero", |c| c.iter().any(|v| v.abs() > 1e-3))
        .prop_map(|c| FirFilter::from_real(&c).unwrap())
}

fn complex_filter() -> impl Strategy<Value = FirFilter> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..16)
        .prop_filter("nonzero", |c| c.iter().any(|v| v.0.abs() + v.1.abs() > 1e-3))
        .prop_map(|c| {
            let coeffs = c.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            FirFilter::new(coeffs, CoeffDomain::Complex).unwrap()
        })
}

fn any_filter() -> impl Strategy<Value = FirFilter> {
    prop_oneof![real_filter(), complex_filter()]
}

fn as_design(p: &AutocorrSequence) -> ZeroPhaseDesign {
    let degree = p.order();
    let basis = match p.domain() {
        CoeffDomain::Real => BasisKind::CosineOnly(degree),
        CoeffDomain::Complex => BasisKind::CosineAndSine(degree),
    };
    ZeroPhaseDesign {
        one_sided: p.one_sided().to_vec(),
        basis,
        applied_weight: 1.0,
        delta_p: 0.0,
        extremal_freqs: Vec::new(),
        iterations: 0,
        delta_history: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lift_is_affine_in_the_spectrum(h in any_filter(), a in 0.01f64..10.0, b in 0.0f64..5.0) {
        let g = AutocorrSequence::from_filter(&h).unwrap();
        let p = lift_with_tolerance(&as_design(&g), a, b, 1e-9, Execution::Sequential).unwrap();
        let scale = a * g.p0() + b;
        for i in 0..64 {
            let w = -PI + 2.0 * PI * i as f64 / 63.0;
            let expect = a * g.spectrum_at(w) + b;
            prop_assert!((p.spectrum_at(w) - expect).abs() <= 1e-12 * scale);
        }
        prop_assert_eq!(p.lift(), Some((a, b)));
    }

    #[test]
    fn coefficient_text_round_trips(h in any_filter()) {
        let back = parse_filter(&format_filter(&h)).unwrap();
        prop_assert_eq!(back.domain(), h.domain());
        prop_assert_eq!(back.coeffs(), h.coeffs());
    }

    #[test]
    fn execution_modes_agree_bitwise(h in any_filter()) {
        let omegas: Vec<f64> = (0..1024).map(|i| PI * i as f64 / 1023.0).collect();
        let seq = magnitude_response_with(&h, &omegas, Execution::Sequential);
        let par = magnitude_response_with(&h, &omegas, Execution::Parallel);
        prop_assert_eq!(seq, par);
    }

    #[test]
    fn alternation_count_is_scale_and_sign_invariant(
        values in prop::collection::vec(-1.0f64..1.0, 4..80),
        scale in 1e-6f64..1e6,
    ) {
        let level = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assume!(level > 0.0);
        let pts: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        let (n, _) = count_alternations(&pts, level, 1e-3);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(w, v)| (w, v * scale)).collect();
        let flipped: Vec<(f64, f64)> = pts.iter().map(|&(w, v)| (w, -v)).collect();
        prop_assert_eq!(count_alternations(&scaled, level * scale, 1e-3).0, n);
        prop_assert_eq!(count_alternations(&flipped, level, 1e-3).0, n);
        prop_assert!(n >= 1);
    }

    #[test]
    fn exact_equiripple_points_all_count(n in 2usize..60, level in 1e-6f64..10.0) {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| (i as f64, if i % 2 == 0 { level } else { -level }))
            .collect();
        prop_assert_eq!(count_alternations(&pts, level, 1e-3).0, n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn remez_is_execution_independent(
        degree in 4usize..20,
        edge in 0.2f64..0.6,
        gap in 0.05f64..0.15,
        k in 0.5f64..5.0,
    ) {
        let bands = BandSpec::new(vec![Band::pass(0.0, edge), Band::stop(edge + gap, 1.0)], CoeffDomain::Real).unwrap();
        let basis = BasisKind::CosineOnly(degree);
        let grid = build_grid(&bands, basis.size(), 16).unwrap();
        let run = |exec| {
            let opts = RemezOptions { exec, ..RemezOptions::default() };
            design_zero_phase(&bands, k, basis, &grid, &opts).unwrap()
        };
        prop_assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
}
