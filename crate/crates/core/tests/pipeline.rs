use std::f64::consts::TAU;
use std::path::PathBuf;

use convexpot::bergman::{orthonormalize, InnerProductEngine, Weight};
use convexpot::classical::{faber, faber_contour_oracle};
use convexpot::conformal::{ExteriorMap, InteriorMap, MapOptions};
use convexpot::experiment::{run, ExperimentConfig, ExperimentKind, RunOptions};
use convexpot::geometry::{BoundaryArc, ConvexDomain, DomainSpec};
use convexpot::measures::{balayage_measure, BoundaryGrid};
use convexpot::zeros::zeros_of;
use convexpot::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn domain(spec: DomainSpec) -> ConvexDomain {
    ConvexDomain::new(spec).unwrap()
}

#[test]
fn faber_recurrence_matches_contour_oracle() {
    let specs = [
        DomainSpec::disk(C64::new(0.2, -0.1), 1.3),
        DomainSpec::ellipse(C64::new(0.0, 0.0), 2.0, 1.0, 0.3),
        DomainSpec::regular(4, 1.0, 0.0),
    ];
    for spec in specs {
        let d = domain(spec);
        let e = ExteriorMap::new(&d, &MapOptions::default()).unwrap();
        let fs = faber(&e, 15).unwrap();
        let c = d.centroid();
        let rho = 1.5 * d.outer_radius();
        for n in 0..=15 {
            let lead = fs.coeffs[n][n];
            assert!((lead - fs.cap.powi(-(n as i32))).norm() <= 1e-12 * lead.norm());
            let oracle = faber_contour_oracle(&e, n, c, rho, 512).unwrap();
            for (k, o) in oracle.iter().enumerate() {
                let rec = fs.coeffs[n][k];
                assert!((rec - o).norm() <= 1e-7 * (1.0 + o.norm()), "n={n} k={k}: {rec} vs {o}");
            }
        }
    }
}

#[test]
fn zeros_rotate_with_the_domain() {
    let n = 18;
    let base = domain(DomainSpec::regular(5, 1.0, 0.0));
    let z0 = zeros_of(&orthonormalize(&InnerProductEngine::new(&base, Weight::Unit, n).unwrap(), n).unwrap(), &base, n)
        .unwrap();
    for alpha in [0.3, 1.1, 2.9] {
        let rot = domain(DomainSpec::regular(5, 1.0, alpha));
        let seq = orthonormalize(&InnerProductEngine::new(&rot, Weight::Unit, n).unwrap(), n).unwrap();
        let z1 = zeros_of(&seq, &rot, n).unwrap();
        let turn = C64::from_polar(1.0, alpha);
        for z in &z0.zeros {
            let best = z1.zeros.iter().map(|w| (w - z * turn).norm()).fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-8, "alpha {alpha}: {z}");
        }
    }
}

#[test]
fn eigen_backward_error_small_up_to_forty() {
    for sides in [4, 6] {
        let d = domain(DomainSpec::regular(sides, 1.0, 0.0));
        let seq = orthonormalize(&InnerProductEngine::new(&d, Weight::Unit, 40).unwrap(), 40).unwrap();
        for n in 1..=40 {
            let zs = zeros_of(&seq, &d, n).unwrap();
            assert!(zs.backward_error <= 1e-10, "n = {n}: {}", zs.backward_error);
        }
    }
}

#[test]
fn balayage_arc_masses_match_direct_harmonic_measure() {
    let d = domain(DomainSpec::regular(4, 1.0, 0.0));
    let opts = MapOptions::default();
    let e = ExteriorMap::new(&d, &opts).unwrap();
    let i = InteriorMap::new(&d, &opts).unwrap();
    let n = 10;
    let seq = orthonormalize(&InnerProductEngine::new(&d, Weight::Unit, n).unwrap(), n).unwrap();
    let zs = zeros_of(&seq, &d, n).unwrap();
    let grid = BoundaryGrid::from_maps(&e, Some(&i)).for_zeros(&e, &i, &zs).unwrap();
    let tau = balayage_measure(&i, &zs, &grid).unwrap();
    let per = d.perimeter();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        // endpoints on grid nodes, where the cumulative is exact
        let a = grid.s[rng.gen_range(0..grid.len() - 1)];
        let b = grid.s[rng.gen_range(0..grid.len() - 1)];
        let arc = BoundaryArc::between(a, b, per);
        let direct: f64 = zs
            .zeros
            .iter()
            .map(|z| i.harmonic_measure(*z, &arc).unwrap())
            .sum::<f64>()
            / n as f64;
        let mass = tau.arc_mass(arc.start(), arc.arclength());
        assert!((mass - direct).abs() <= 1e-9, "{mass} vs {direct}");
        // splitting at an interior node is additive
        let mid = grid.s[rng.gen_range(0..grid.len() - 1)];
        let first = (mid - a).rem_euclid(per).min(arc.arclength());
        let split = tau.arc_mass(a, first) + tau.arc_mass(a + first, arc.arclength() - first);
        assert!((split - mass).abs() <= 1e-12);
    }
}

#[test]
fn sweep_on_ngons_settles_and_stays_bounded() {
    let specs: Vec<DomainSpec> = [4, 5, 6].iter().map(|&k| DomainSpec::regular(k, 1.0, 0.0)).collect();
    let cfg = ExperimentConfig::new(ExperimentKind::Theorem2Check, specs, 2, 40);
    let rep = run(&cfg, &RunOptions::default()).unwrap();
    for dom in &rep.domains {
        let recs: Vec<_> = rep.records.iter().filter(|r| r.domain == dom.label).collect();
        let d = |n: usize| recs.iter().find(|r| r.n == n).unwrap().d.unwrap();
        assert!(d(40) < d(5), "{}", dom.label);
        let ratio: Vec<f64> = recs.iter().map(|r| r.d.unwrap() / r.eps.unwrap().max(1e-12).sqrt()).collect();
        for w in ratio.windows(2) {
            assert!(w[1] <= 3.0 * w[0] && w[0] <= 3.0 * w[1], "{}: {w:?}", dom.label);
        }
        let k = dom.constants.as_ref().unwrap();
        assert!(k.rate_c.unwrap() > 0.0 && k.rate_residual.unwrap() < 0.5);
    }
}

#[test]
fn cached_runs_equal_cold_runs() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("pipeline-cache");
    let _ = std::fs::remove_dir_all(&dir);
    let mut cfg = ExperimentConfig::new(
        ExperimentKind::DiscrepancySweep,
        vec![DomainSpec::regular(4, 1.0, 0.0), DomainSpec::ellipse(C64::new(0.0, 0.0), 2.0, 1.0, 0.0)],
        1,
        10,
    );
    cfg.cache = true;
    let cold = run(&cfg, &RunOptions::default()).unwrap();
    let opts = RunOptions {
        jobs: Some(2),
        cache_dir: Some(dir.clone()),
    };
    let fill = run(&cfg, &opts).unwrap();
    assert!(std::fs::read_dir(&dir).unwrap().count() >= 4);
    let warm = run(&cfg, &opts).unwrap();
    assert_eq!(cold.csv(), fill.csv());
    assert_eq!(cold.csv(), warm.csv());
    assert_eq!(cold.records, warm.records);
    // the ellipse has no interior map, so no discrepancy, but ε is still there
    let ell: Vec<_> = warm.records.iter().filter(|r| r.domain == "ellipse").collect();
    assert!(ell.iter().all(|r| r.d.is_none() && r.eps.is_some()));
}

#[test]
fn hexagon_arc_and_complement_measures_sum_to_one() {
    let d = domain(DomainSpec::regular(6, 1.0, 0.0));
    let i = InteriorMap::new(&d, &MapOptions::default()).unwrap();
    let per = d.perimeter();
    for k in 0..20 {
        let z = C64::from_polar(0.04 * k as f64, 0.7 * k as f64);
        let s = TAU * k as f64 / 20.0 % per;
        let arc = BoundaryArc::new(s, 0.37 * per, per);
        let a = i.harmonic_measure(z, &arc).unwrap();
        let b = i.harmonic_measure(z, &arc.complement()).unwrap();
        assert!((a + b - 1.0).abs() <= 1e-12);
    }
}
