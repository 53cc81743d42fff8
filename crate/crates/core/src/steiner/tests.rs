use super::*;
use crate::baselines::{exact_mst, exact_steiner};
use crate::gen::{generate_metric, MetricKind};
use crate::oracle::{DistanceOracle, MetricInstance};

/// Regular simplex of `m` terminals at pairwise distance `d`, embedded on
/// scaled basis vectors, plus extra points appended from `extra` coords.
fn simplex_metric(m: usize, d: f64, extra: &[Vec<f64>], terminals: usize) -> MetricInstance {
    let scale = d / 2.0f64.sqrt();
    let mut coords: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut c = vec![0.0; m];
            c[i] = scale;
            c
        })
        .collect();
    for e in extra {
        assert_eq!(e.len(), m);
        coords.push(e.clone());
    }
    MetricInstance::from_coords(&coords, (0..terminals).collect()).unwrap()
}

fn centroid(m: usize, d: f64) -> Vec<f64> {
    let scale = d / 2.0f64.sqrt();
    vec![scale / m as f64; m]
}

fn heavy_params(seed: u64) -> SteinerParams {
    let mut p = SteinerParams::new(seed).with_epsilon(0.5);
    p.m_coeff = 0.5;
    p
}

#[test]
fn find_representative_trivial_cases() {
    // two terminals in one component at level 3: exactly one representative
    let m = MetricInstance::from_coords(
        &[vec![0.0, 0.0], vec![0.1, 0.0], vec![9.0, 9.0]],
        vec![0, 1, 2],
    )
    .unwrap();
    let mut o = DistanceOracle::new(&m);
    let params = SteinerParams::new(1).with_epsilon(0.5);
    let mut est = SteinerEstimator::new(&mut o, &params).unwrap();
    // d_base = 0.1; at level 2 the threshold is 0.15 so terminals 0 and 1
    // share a component, and the net radius 0.1125 leaves one rep
    let state = est.level_components(2);
    assert_eq!(state.comp_of[0], state.comp_of[1]);
    assert_eq!(state.nets[state.comp_of[0]].len(), 1);
    let r0 = est.find_representative(2, 0);
    let r1 = est.find_representative(2, 1);
    assert_eq!(r0, r1, "both terminals report the same component rep");
    // an isolated terminal represents itself
    assert_eq!(est.find_representative(2, 2), 2);
}

#[test]
fn find_representative_matches_ground_truth() {
    let metric = generate_metric(&MetricKind::RandomClosure, 50, 1.0, 5).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let params = SteinerParams::new(2);
    let mut est = SteinerEstimator::new(&mut o, &params).unwrap();
    let d_base = est.base_distance();
    for level in 1..=6usize {
        let threshold = d_base * 1.1f64.powi(level as i32 - 1);
        let sep = 0.1 * d_base * 1.1f64.powi(level as i32);
        // independent recomputation of components from the raw matrix
        let comp = brute_components(&metric, threshold);
        for t in 0..50u32 {
            let rep = est.find_representative(level, t);
            assert_eq!(
                comp[t as usize], comp[rep as usize],
                "rep of {t} in a different component at level {level}"
            );
            let d = metric.distance_raw(t as usize, rep as usize);
            assert!(d < sep || t == rep, "rep not within net radius: {d} >= {sep}");
        }
    }
}

fn brute_components(metric: &MetricInstance, threshold: f64) -> Vec<usize> {
    let k = metric.terminals().len();
    let ids = metric.terminals();
    let mut comp: Vec<usize> = (0..k).collect();
    loop {
        let mut changed = false;
        for i in 0..k {
            for j in 0..k {
                if metric.distance_raw(ids[i] as usize, ids[j] as usize) < threshold
                    && comp[i] != comp[j]
                {
                    let c = comp[i].min(comp[j]);
                    comp[i] = c;
                    comp[j] = c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // map to terminal-id space
    let mut by_id = vec![usize::MAX; metric.n_points()];
    for (pos, &id) in ids.iter().enumerate() {
        by_id[id as usize] = comp[pos];
    }
    by_id
}

#[test]
fn bfs_reports_reps_or_overflow() {
    let metric = generate_metric(&MetricKind::Euclidean { dim: 2 }, 30, 1.0, 7).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let mut est = SteinerEstimator::new(&mut o, &SteinerParams::new(3)).unwrap();
    let state = est.level_components(4).clone();
    for (c, net) in state.nets.iter().enumerate() {
        let t = metric.terminals()[state.comps[c][0]];
        match est.bfs_representatives(4, t, net.len()) {
            BfsOutcome::Reps(reps) => assert_eq!(reps.len(), net.len()),
            BfsOutcome::Overflow => panic!("cap equal to net size must not overflow"),
        }
        if net.len() > 1 {
            assert_eq!(
                est.bfs_representatives(4, t, net.len() - 1),
                BfsOutcome::Overflow,
                "cap below net size must overflow"
            );
        }
    }
}

#[test]
fn nets_are_separated_and_maximal() {
    let metric = generate_metric(&MetricKind::RandomClosure, 40, 1.0, 11).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let mut est = SteinerEstimator::new(&mut o, &SteinerParams::new(4)).unwrap();
    let d_base = est.base_distance();
    for level in 1..=8usize {
        let sep = 0.1 * d_base * 1.1f64.powi(level as i32);
        let state = est.level_components(level).clone();
        let ids = metric.terminals();
        for (c, net) in state.nets.iter().enumerate() {
            for (a, &r1) in net.iter().enumerate() {
                for &r2 in net.iter().skip(a + 1) {
                    assert!(
                        metric.distance_raw(ids[r1] as usize, ids[r2] as usize) >= sep,
                        "representatives too close at level {level}"
                    );
                }
            }
            for &t in &state.comps[c] {
                assert!(
                    net.iter()
                        .any(|&r| r == t
                            || metric.distance_raw(ids[t] as usize, ids[r] as usize) < sep),
                    "terminal {t} not covered by any representative"
                );
            }
        }
    }
}

#[test]
fn threshold_graphs_are_nested() {
    let metric = generate_metric(&MetricKind::Euclidean { dim: 3 }, 45, 1.0, 13).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let mut est = SteinerEstimator::new(&mut o, &SteinerParams::new(5)).unwrap();
    let d_base = est.base_distance();
    for level in 1..=8usize {
        // exact equality with the brute-force threshold components, and
        // refinement into the next level
        let state = est.level_components(level).clone();
        let brute = brute_components(&metric, d_base * 1.1f64.powi(level as i32 - 1));
        let ids = metric.terminals();
        for i in 0..ids.len() {
            for j in 0..ids.len() {
                assert_eq!(
                    state.comp_of[i] == state.comp_of[j],
                    brute[ids[i] as usize] == brute[ids[j] as usize],
                    "component structure differs from ground truth at level {level}"
                );
            }
        }
        let next = est.level_components(level + 1).clone();
        for i in 0..ids.len() {
            for j in 0..ids.len() {
                if state.comp_of[i] == state.comp_of[j] {
                    assert_eq!(
                        next.comp_of[i], next.comp_of[j],
                        "level {level} components must refine level {}",
                        level + 1
                    );
                }
            }
        }
    }
}

#[test]
fn classify_single_component_is_case1() {
    let metric = generate_metric(&MetricKind::Euclidean { dim: 2 }, 24, 1.0, 17).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let mut est = SteinerEstimator::new(&mut o, &SteinerParams::new(6)).unwrap();
    // deep level: everything is one component with few representatives
    let class = est.classify_level(40);
    assert_eq!(class, LevelClass::Case1);
}

#[test]
fn classify_many_pair_components_is_heavy() {
    // 30 well-separated pairs of terminals: at the pair-merging levels the
    // component count (30) exceeds M
    let m = 60usize;
    let d = 3.375; // cross distance; partners at distance 1
    let scale = d / 2.0f64.sqrt();
    let mut coords: Vec<Vec<f64>> = Vec::new();
    for i in 0..30 {
        let mut a = vec![0.0; 31];
        a[i] = scale;
        let mut b = a.clone();
        b[30] = 1.0;
        coords.push(a);
        coords.push(b);
    }
    // a few faraway Steiner points so n > k
    for j in 0..10 {
        let mut c = vec![50.0 + j as f64; 31];
        c[30] = 0.0;
        coords.push(c);
    }
    let metric = MetricInstance::from_coords(&coords, (0..m).collect()).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let params = heavy_params(7);
    params.check_conditions(metric.n_points(), m).unwrap();
    let mut est = SteinerEstimator::new(&mut o, &params).unwrap();
    // d_base = 1 (pair partners); at level 2 the threshold is 1.5 so pairs
    // merge while cross edges (>= 3.3) stay out
    let state = est.level_components(2).clone();
    assert_eq!(state.comps.len(), 30);
    assert!(state.comps.iter().all(|c| c.len() == 2));
    assert_eq!(est.classify_level(2), LevelClass::Heavy);
}

#[test]
fn heavy_level_without_nearby_steiner_gains_nothing() {
    let k = 60usize;
    let extra: Vec<Vec<f64>> = (0..10)
        .map(|j| vec![100.0 + 7.0 * j as f64; k])
        .collect();
    let metric = simplex_metric(k, 1.0, &extra, k);
    let mut o = DistanceOracle::new(&metric);
    let params = heavy_params(8);
    params.check_conditions(metric.n_points(), k).unwrap();
    let mut est = SteinerEstimator::new(&mut o, &params).unwrap();
    assert_eq!(est.classify_level(1), LevelClass::Heavy);
    let gain = est.solve_level_heavy(1);
    assert_eq!(gain, 0.0, "no Steiner vertex in range, gain must be zero");
}

#[test]
fn heavy_level_with_planted_hub_reports_large_gain() {
    // one Steiner hub within tau_1 of all 60 singleton components; the
    // exact chi is 59 and the estimate must land within the sandwich
    let k = 60usize;
    let mut extra: Vec<Vec<f64>> = vec![centroid(k, 1.0)];
    for j in 0..9 {
        extra.push(vec![100.0 + 7.0 * j as f64; k]);
    }
    let metric = simplex_metric(k, 1.0, &extra, k);
    let mut o = DistanceOracle::new(&metric);
    let params = heavy_params(9);
    params.check_conditions(metric.n_points(), k).unwrap();
    let mut est = SteinerEstimator::new(&mut o, &params).unwrap();
    assert_eq!(est.classify_level(1), LevelClass::Heavy);
    let gain = est.solve_level_heavy(1);
    assert!(
        gain >= 20.0 && gain <= 59.5,
        "hub gain {gain} outside the expected sandwich for chi = 59"
    );
}

#[test]
fn heavy_level_with_private_steiner_vertices_gains_little() {
    // every terminal has its own nearby Steiner vertex and none is shared:
    // no set covers two components, chi = 0
    let k = 60usize;
    let scale = 1.0 / 2.0f64.sqrt();
    let mut extra: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        let mut c = vec![0.0; k];
        c[i] = scale + 0.2;
        extra.push(c);
    }
    let metric = simplex_metric(k, 1.0, &extra, k);
    let mut o = DistanceOracle::new(&metric);
    let params = heavy_params(10);
    params.check_conditions(metric.n_points(), k).unwrap();
    let mut est = SteinerEstimator::new(&mut o, &params).unwrap();
    assert_eq!(est.classify_level(1), LevelClass::Heavy);
    let gain = est.solve_level_heavy(1);
    assert!(
        gain <= 0.5 * k as f64,
        "gain {gain} too large for a chi = 0 level"
    );
}

#[test]
fn all_terminals_returns_exact_mst() {
    // no Steiner vertices: the estimate equals w(T*) = ST exactly
    let metric = generate_metric(&MetricKind::Euclidean { dim: 2 }, 12, 1.0, 21).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let report = estimate_steiner(&mut o, &SteinerParams::new(11)).unwrap();
    let mst = exact_mst(&metric, metric.terminals());
    let st = exact_steiner(&metric).unwrap();
    assert_eq!(report.estimate, mst);
    assert_eq!(mst, st);
    assert!(!report.fired);
}

#[test]
fn all_terminals_sparse_path_also_exact() {
    let metric = generate_metric(&MetricKind::Euclidean { dim: 2 }, 40, 1.0, 23).unwrap();
    let mut o = DistanceOracle::new(&metric);
    let report = estimate_steiner(&mut o, &SteinerParams::new(12).with_epsilon(0.5)).unwrap();
    assert!(!report.dense_path);
    assert_eq!(report.estimate, report.mst_weight);
    assert_eq!(report.estimate, exact_mst(&metric, metric.terminals()));
}

#[test]
fn collinear_midpoint_gives_no_improvement() {
    // |T| = 2 with a Steiner midpoint: the vertex covers exactly two
    // components, which the F_{!=2} rule discards; ST = w(T*)
    let metric = MetricInstance::from_coords(
        &[vec![0.0], vec![10.0], vec![5.0]],
        vec![0, 1],
    )
    .unwrap();
    let mut o = DistanceOracle::new(&metric);
    let report = estimate_steiner(&mut o, &SteinerParams::new(13)).unwrap();
    assert!(!report.fired);
    assert_eq!(report.estimate, 10.0);
    assert_eq!(exact_steiner(&metric).unwrap(), 10.0);
}

#[test]
fn equilateral_with_fermat_point_fires() {
    let h = 3.0f64.sqrt() / 2.0;
    let metric = MetricInstance::from_coords(
        &[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, h],
            vec![0.5, h / 3.0],
        ],
        vec![0, 1, 2],
    )
    .unwrap();
    let st = exact_steiner(&metric).unwrap();
    assert!((st - 3.0f64.sqrt()).abs() < 1e-4);
    for seed in 0..100 {
        let mut o = DistanceOracle::new(&metric);
        let report = estimate_steiner(&mut o, &SteinerParams::new(seed)).unwrap();
        assert!(report.fired, "seed {seed}: the triple cover must fire");
        assert_eq!(report.mst_weight, 2.0);
        assert!((report.estimate - 0.95 * 2.0).abs() < 1e-12);
        // sandwich against the exact Steiner weight
        assert!(report.estimate >= 0.95 * st);
        assert!(report.estimate <= 1.05 * (2.0 - 0.05) * st);
    }
}

#[test]
fn output_is_always_two_valued_and_sandwiched() {
    for seed in 0..40u64 {
        let n = 6 + (seed % 11) as usize;
        let frac = 0.3 + 0.6 * ((seed % 7) as f64 / 7.0);
        let metric = generate_metric(&MetricKind::Euclidean { dim: 2 }, n, frac, seed).unwrap();
        let mut o = DistanceOracle::new(&metric);
        let report = estimate_steiner(&mut o, &SteinerParams::new(seed ^ 0xabc)).unwrap();
        let w = report.mst_weight;
        let eta = report.eta;
        let is_w = (report.estimate - w).abs() < 1e-12;
        let is_reduced = (report.estimate - (1.0 - eta) * w).abs() < 1e-12;
        assert!(is_w || is_reduced, "output must be one of the two values");
        let st = exact_steiner(&metric).unwrap();
        if st > 0.0 {
            assert!(report.estimate >= 0.95 * st - 1e-9);
            assert!(report.estimate <= 1.05 * (2.0 - eta) * st + 1e-9);
        }
    }
}

#[test]
fn query_accounting_charges_terminal_block() {
    let metric = generate_metric(&MetricKind::Euclidean { dim: 2 }, 14, 0.5, 31).unwrap();
    let k = metric.terminals().len();
    let mut o = DistanceOracle::new(&metric);
    let report = estimate_steiner(&mut o, &SteinerParams::new(15)).unwrap();
    let block = report.ledger.phase("terminal_block").unwrap().distance;
    assert_eq!(block as usize, k * (k - 1) / 2);
    assert!(report.ledger.distance_queries() >= block);
}
