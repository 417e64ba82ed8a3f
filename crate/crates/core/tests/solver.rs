mod common;

use std::time::Duration;

use common::girth_oracle;
use girthforge::model::DesignSpec;
use girthforge::solver::{certify, solve, Mode, NodeSelection, SolveConfig, SolveReport, SolveStatus};
use girthforge::tanner::{Cell, TannerGraph};
use proptest::prelude::*;

/// Minimum deviation over every matrix with degrees within target and no
/// cycle shorter than `t`.
fn brute_force(dv: &[usize], dc: &[usize], t: usize) -> u64 {
    let (m, n) = (dc.len(), dv.len());
    let target: u64 = dv.iter().chain(dc).map(|&d| d as u64).sum();
    let mut best = target;
    for mask in 0u32..1 << (m * n) {
        let ones: Vec<Cell> = (0..m * n).filter(|&k| mask >> k & 1 == 1).map(|k| Cell::new(k / n, k % n)).collect();
        if 2 * ones.len() as u64 > target || target - 2 * ones.len() as u64 >= best {
            continue;
        }
        let z = target - 2 * ones.len() as u64;
        let fits = (0..n).all(|c| ones.iter().filter(|e| e.col == c).count() <= dv[c])
            && (0..m).all(|r| ones.iter().filter(|e| e.row == r).count() <= dc[r]);
        if !fits {
            continue;
        }
        let g = TannerGraph::new(m, n, &ones).unwrap();
        if girth_oracle(&g).map_or(true, |l| l >= t) {
            best = z;
        }
    }
    best
}

fn monotone(report: &SolveReport) -> bool {
    report.trace.windows(2).all(|w| {
        w[1].z_l >= w[0].z_l
            && w[1].nodes >= w[0].nodes
            && w[1].seconds >= w[0].seconds
            && match (w[0].z, w[1].z) {
                (Some(a), Some(b)) => b <= a,
                (Some(_), None) => false,
                _ => true,
            }
    })
}

fn check(report: &SolveReport, spec: &DesignSpec) {
    assert!(monotone(report), "{:?}", report.trace);
    assert!(report.z.map_or(true, |z| z >= report.z_l));
    assert!(report.z_l % 2 == spec.total_target() % 2, "bound parity");
    if report.incumbent.is_some() {
        certify(report, spec).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn unfixed_search_matches_brute_force(
        (dv, dc) in (3usize..=4).prop_flat_map(|n| (
            proptest::collection::vec(1usize..=3, n),
            proptest::collection::vec(1usize..=n, 3),
        )),
        t in prop::sample::select(vec![4usize, 6, 8]),
    ) {
        let spec = DesignSpec::irregular(dv.clone(), dc.clone(), t).unwrap();
        let report = solve(&spec, &SolveConfig::with_mode(Mode::BC0)).unwrap();
        prop_assert_eq!(report.status, SolveStatus::Optimal);
        prop_assert_eq!(report.z, Some(brute_force(&dv, &dc, t)));
        check(&report, &spec);
    }
}

#[test]
fn regular_instances_agree_with_brute_force_across_modes() {
    for (m, n, j, k, t) in [(3, 6, 2, 4, 6), (4, 4, 2, 2, 6), (3, 6, 2, 4, 8), (4, 4, 2, 2, 10), (3, 3, 2, 2, 6)] {
        let spec = DesignSpec::regular(m, n, j, k, t).unwrap();
        let oracle = brute_force(spec.dv(), spec.dc(), t);
        for mode in Mode::ALL {
            let report = solve(&spec, &SolveConfig::with_mode(mode)).unwrap();
            check(&report, &spec);
            assert_eq!(report.status, SolveStatus::Optimal);
            match report.fixing_exact {
                Some(false) => assert!(report.z >= Some(oracle), "{mode} {m}x{n} T={t}"),
                _ => assert_eq!(report.z, Some(oracle), "{mode} {m}x{n} T={t}"),
            }
        }
    }
}

#[test]
fn node_selection_does_not_change_the_optimum() {
    for (m, n, t) in [(6, 12, 6), (8, 16, 8)] {
        let spec = DesignSpec::regular(m, n, 2, 4, t).unwrap();
        let best = solve(&spec, &SolveConfig::with_mode(Mode::BC0)).unwrap();
        let cfg = SolveConfig { node_selection: NodeSelection::DepthFirst, ..SolveConfig::with_mode(Mode::BC0) };
        let deep = solve(&spec, &cfg).unwrap();
        check(&best, &spec);
        check(&deep, &spec);
        assert_eq!(best.z, deep.z);
    }
}

#[test]
fn every_mode_certifies_on_the_smallest_desk_instance() {
    for t in [6, 8, 10] {
        let spec = DesignSpec::regular(10, 20, 3, 6, t).unwrap();
        for mode in Mode::ALL {
            let cfg = SolveConfig { time_limit: Duration::from_secs(5), ..SolveConfig::with_mode(mode) };
            let report = solve(&spec, &cfg).unwrap();
            assert!(report.incumbent.is_some(), "{mode} T={t}");
            check(&report, &spec);
            assert!(report.wall_seconds < 10.0, "{mode} T={t} took {}", report.wall_seconds);
            if report.status == SolveStatus::Optimal {
                assert_eq!(report.z, Some(report.z_l));
                assert_eq!(report.gap_percent, 0.0);
            }
        }
    }
}

#[test]
fn seeded_runs_repeat() {
    let spec = DesignSpec::regular(8, 16, 2, 4, 8).unwrap();
    let cfg = SolveConfig { seed: Some(3), ..SolveConfig::with_mode(Mode::BC4) };
    let a = solve(&spec, &cfg).unwrap();
    let b = solve(&spec, &cfg).unwrap();
    assert_eq!(a.z, b.z);
    assert_eq!(a.incumbent, b.incumbent);
}
