use std::sync::OnceLock;

use gbzlab::classify::{detect_gaps, RegionLabel, TagSummary, DEFAULT_REL_TOL};
use gbzlab::classify::{classify_region, GapReport};
use gbzlab::gbz::{gbz_curve, DEFAULT_THETA_STEPS};
use gbzlab::linalg::C64;
use gbzlab::model::ModelParams;
use gbzlab::spectral::{analytic_bulk, diagonalize, Precision};
use gbzlab::sweep::{classify_point, ClassifierConfig, PointResult};
use gbzlab::tearing::{critical_epsilon, epsilon_grid, TearingScan};
use proptest::prelude::*;

const SETS: [(f64, f64, f64, f64); 3] = [(0.7, 2.0 / 3.0, 0.3, 1.0), (1.7, 1.6, 1.0, 2.0), (1.2, 1.0, 0.5, 1.5)];

fn ring(t1: f64, gamma: f64, eps: f64, n: usize) -> ModelParams {
    ModelParams::ring(t1, 1.0, gamma, eps, n)
}

fn scans() -> &'static Vec<TearingScan> {
    static SCANS: OnceLock<Vec<TearingScan>> = OnceLock::new();
    SCANS.get_or_init(|| {
        SETS.iter()
            .map(|&(t1, g, lo, hi)| critical_epsilon(&ring(t1, g, 0.0, 30), &epsilon_grid(lo, hi, 0.01).unwrap()).unwrap())
            .collect()
    })
}

fn onset(lo: f64, hi: f64, hit: impl Fn(f64) -> bool) -> Option<f64> {
    epsilon_grid(lo, hi, 0.01).unwrap().into_iter().find(|&e| hit(e))
}

/// Smallest grid value from which `hit` holds up to the end of the grid,
/// the same reading as the critical dissipation itself.
fn lasting_onset(lo: f64, hi: f64, hit: impl Fn(f64) -> bool) -> Option<f64> {
    let mut start = None;
    for e in epsilon_grid(lo, hi, 0.01).unwrap().into_iter().rev() {
        if !hit(e) {
            break;
        }
        start = Some(e);
    }
    start
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gaps_ignore_negation_and_conjugation(t1 in 0.2..2.2f64, gamma in 0.05..2.0f64, eps in 0.0..2.5f64) {
        prop_assume!((t1 - gamma).abs() > 0.05);
        let e = analytic_bulk(&ring(t1, gamma, eps, 30), 128);
        prop_assume!(!e.is_empty());
        let base = detect_gaps(&e, DEFAULT_REL_TOL).unwrap();
        for image in [e.iter().map(|z| -z).collect::<Vec<C64>>(), e.iter().map(|z| z.conj()).collect()] {
            let r = detect_gaps(&image, DEFAULT_REL_TOL).unwrap();
            prop_assert_eq!(r.real_gap_open, base.real_gap_open);
            prop_assert_eq!(r.imag_gap_open, base.imag_gap_open);
            prop_assert_eq!(r.component_count, base.component_count);
            prop_assert!((r.real_gap_width - base.real_gap_width).abs() < 1e-12);
            prop_assert!((r.imag_gap_width - base.imag_gap_width).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_follow_gaps_and_tags(
        re in any::<bool>(), im in any::<bool>(), topological in 0usize..3, bound in 0usize..3,
        t1 in 0.2..2.0f64, gamma in 0.0..2.0f64,
    ) {
        let p = ring(t1, gamma, 1.0, 10);
        prop_assume!(!p.on_degenerate_line());
        let report = GapReport {
            real_gap_open: re,
            real_gap_width: if re { 0.1 } else { 0.0 },
            imag_gap_open: im,
            imag_gap_width: if im { 0.1 } else { 0.0 },
            component_count: 1,
        };
        let label = classify_region(&p, &report, &TagSummary { topological, bound }).label;
        use RegionLabel::*;
        prop_assert_ne!(label, Degenerate);
        if matches!(label, V | VII) {
            prop_assert!(topological > 0);
        }
        if label == VI {
            prop_assert!(bound > 0 && topological == 0);
        }
        // the gap pattern alone fixes the family
        let family = match (re, im) {
            (false, false) => vec![I],
            (true, false) => vec![II, VI, VII],
            (false, true) => vec![III],
            (true, true) => vec![IV, V],
        };
        prop_assert!(family.contains(&label), "{:?} for {:?}", label, (re, im));
    }
}

#[test]
fn region_codes_round_trip() {
    for (i, l) in RegionLabel::ALL.iter().enumerate() {
        assert_eq!(l.code() as usize, i);
        assert_eq!(RegionLabel::from_code(l.code()), Some(*l));
        let json = serde_json::to_string(l).unwrap();
        assert_eq!(serde_json::from_str::<RegionLabel>(&json).unwrap(), *l);
    }
    assert_eq!(RegionLabel::from_code(8), None);
    assert!(serde_json::from_str::<RegionLabel>("9").is_err());
}

/// Samples of the strong-dissipation plane, `eps = 2.5 > |gamma|`.
fn strong_dissipation_grid() -> &'static Vec<(f64, f64, RegionLabel)> {
    static GRID: OnceLock<Vec<(f64, f64, RegionLabel)>> = OnceLock::new();
    GRID.get_or_init(|| {
        let config = ClassifierConfig::default();
        let mut out = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let (t1, gamma) = (0.1 + 0.12 * i as f64, 0.05 + 0.1 * j as f64);
                let p = ring(t1, gamma, 2.5, 30);
                if p.on_degenerate_line() {
                    continue;
                }
                let r: PointResult = classify_point(&p, &config).unwrap();
                out.push((t1, gamma, r.classification.label));
            }
        }
        out
    })
}

#[test]
fn strong_dissipation_labels_match_the_closed_form_region() {
    let mut wrong = Vec::new();
    for &(t1, gamma, label) in strong_dissipation_grid() {
        let inside = t1 < (1.0 + gamma * gamma).sqrt();
        let ok = if inside { label == RegionLabel::V } else { matches!(label, RegionLabel::III | RegionLabel::IV) };
        if !ok {
            wrong.push(format!("({t1:.2}, {gamma:.2}): {label}"));
        }
    }
    let total = strong_dissipation_grid().len();
    assert!(wrong.is_empty(), "{} of {total} points mislabelled: {}", wrong.len(), wrong.join(", "));
}

/// The open chain is topological iff `|t1^2 - gamma^2| < t2^2`. Edge modes
/// are only cleanly isolated at 30 cells while their decay length stays
/// short, here `sqrt|t1^2 - gamma^2| / t2 <= 0.7`.
#[test]
fn strong_dissipation_labels_match_the_open_chain_criterion() {
    let mut wrong = Vec::new();
    for &(t1, gamma, label) in strong_dissipation_grid() {
        let r = (t1 * t1 - gamma * gamma).abs().sqrt();
        if r <= 0.7 && label != RegionLabel::V {
            wrong.push(format!("({t1:.2}, {gamma:.2}) topological: {label}"));
        }
        let outside = t1 > (1.0 + gamma * gamma).sqrt();
        if outside && !matches!(label, RegionLabel::III | RegionLabel::IV) {
            wrong.push(format!("({t1:.2}, {gamma:.2}) outside: {label}"));
        }
    }
    assert!(wrong.is_empty(), "{}", wrong.join(", "));
}

#[test]
fn gap_widths_converge_in_ring_size() {
    let config = ClassifierConfig::default();
    for (t1, gamma, eps) in [(1.7, 1.6, 1.0), (1.7, 1.6, 2.5), (0.7, 2.0 / 3.0, 0.61), (0.7, 2.0 / 3.0, 0.8)] {
        let at = |n| classify_point(&ring(t1, gamma, eps, n), &config).unwrap().gaps.unwrap();
        let (a, b) = (at(30), at(60));
        assert!((a.real_gap_width - b.real_gap_width).abs() < 0.02, "({t1}, {gamma}, {eps}) {a:?} vs {b:?}");
        assert!((a.imag_gap_width - b.imag_gap_width).abs() < 0.02, "({t1}, {gamma}, {eps}) {a:?} vs {b:?}");
    }
}

#[test]
fn closure_gap_never_grows_with_dissipation() {
    for s in scans() {
        let values: Vec<f64> = s.delta_values.iter().flatten().copied().collect();
        assert_eq!(values.len(), s.epsilon_grid.len(), "undefined closure gap in {:?}", s.params_base);
        for (k, w) in values.windows(2).enumerate() {
            assert!(w[1] <= w[0] + 1e-9, "gamma {}: Delta rises at eps {:.2}", s.params_base.gamma, s.epsilon_grid[k + 1]);
        }
        let star = s.epsilon_star.unwrap();
        assert!(star >= s.epsilon_grid[0] && star <= *s.epsilon_grid.last().unwrap());
    }
}

#[test]
fn closure_gap_is_even_in_gamma() {
    let grid = epsilon_grid(0.3, 1.0, 0.01).unwrap();
    let a = critical_epsilon(&ring(0.7, 2.0 / 3.0, 0.0, 30), &grid).unwrap();
    let b = critical_epsilon(&ring(0.7, -2.0 / 3.0, 0.0, 30), &grid).unwrap();
    // equal up to rounding in the root solver
    for (x, y) in a.delta_values.iter().zip(&b.delta_values) {
        match (x, y) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-12, "{x} vs {y}"),
            _ => assert_eq!(x, y),
        }
    }
    assert_eq!(a.epsilon_star, b.epsilon_star);
}

#[test]
fn tearing_coincides_with_four_arcs() {
    for (s, &(t1, gamma, lo, hi)) in scans().iter().zip(&SETS) {
        let star = s.epsilon_star.unwrap();
        let four = lasting_onset(lo, hi, |e| {
            let p = ring(t1, gamma, e, 30);
            let curve = gbz_curve(&p, DEFAULT_THETA_STEPS).unwrap();
            let links = curve.continuation_links(DEFAULT_THETA_STEPS);
            let r = gbzlab::classify::detect_gaps_linked(&curve.energies(), DEFAULT_REL_TOL, 5.0, &links).unwrap();
            r.component_count >= 4
        })
        .unwrap();
        assert!((four - star).abs() <= 0.01 + 1e-9, "gamma {gamma}: eps* {star} vs four arcs at {four}");
    }
}

#[test]
fn tearing_coincides_with_edge_state_emergence() {
    let config = ClassifierConfig::default();
    let mut misses = Vec::new();
    for (s, &(t1, gamma, lo, hi)) in scans().iter().zip(&SETS) {
        let star = s.epsilon_star.unwrap();
        let first = onset(lo, hi, |e| classify_point(&ring(t1, gamma, e, 30), &config).unwrap().tags.topological > 0);
        if first.is_none_or(|f| (f - star).abs() > 0.01 + 1e-9) {
            misses.push(format!("gamma {gamma:.3}: eps* {star:.2}, first edge tag {first:?}"));
        }
    }
    assert!(misses.is_empty(), "{}", misses.join("; "));
}

#[test]
fn gain_chain_hosts_the_upper_half_plane() {
    let p = ring(1.7, 1.6, 2.5, 30);
    let pairs = diagonalize(&p, Precision::Auto).unwrap();
    let upper: Vec<f64> = pairs.iter().filter(|q| q.energy.im > 0.1).map(|q| q.rho_i).collect();
    assert_eq!(upper.len(), p.dim() / 2);
    let below = upper.iter().filter(|&&r| r <= 0.99).count();
    let min = upper.iter().copied().fold(1.0, f64::min);
    assert!(below == 0, "{below} of {} states with Im E > 0.1 have rho_I <= 0.99 (min {min:.4})", upper.len());
}
