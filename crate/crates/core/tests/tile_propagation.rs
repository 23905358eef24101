use deblur_core::blind::{fit_gaussian_likelihood, EstimationConfig};
use deblur_core::image_core::{convolve2d, split_dims, BoundaryMode};
use deblur_core::propagation::{
    estimate_all, estimate_all_with, plan_grid, plan_tiles, propagation_order, InitSource, PropagationMode,
    TilePlan, TileStatus,
};
use deblur_core::synthetic::fiber_phantom;
use deblur_core::{Image, Kernel};
use proptest::prelude::*;

fn depths(plan: &TilePlan) -> Vec<usize> {
    let mut depth = vec![usize::MAX; plan.grid.len()];
    for (d, wave) in propagation_order(plan).unwrap().iter().enumerate() {
        for &(t, _) in wave {
            depth[t] = d;
        }
    }
    depth
}

/// Plain breadth-first distance to the nearest seed.
fn bfs_distance(plan: &TilePlan) -> Vec<usize> {
    let n = plan.grid.len();
    let mut dist = vec![usize::MAX; n];
    for &s in &plan.seeds {
        dist[s] = 0;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for t in 0..n {
            for m in plan.grid.neighbours(t) {
                if dist[m] != usize::MAX && dist[m] + 1 < dist[t] {
                    dist[t] = dist[m] + 1;
                    changed = true;
                }
            }
        }
    }
    dist
}

#[test]
fn plan_of_a_small_image_is_one_seed() {
    let img = Image::filled(180, 150, 1, 0.5).unwrap();
    let plan = plan_tiles(&img, 200, 20, 8, 3).unwrap();
    assert_eq!(plan.grid_dims(), (1, 1));
    assert_eq!(plan.seeds, vec![0]);
    assert_eq!(plan.assignment, vec![TileStatus::Seed]);
}

#[test]
fn two_adjacent_seeds_share_wave_zero() {
    let mut plan = plan_grid(split_dims(800, 800, 200, 20), 1, 0).unwrap();
    let (a, b) = (plan.grid.index_of(1, 1), plan.grid.index_of(1, 2));
    plan.seeds = vec![a, b];
    let waves = propagation_order(&plan).unwrap();
    assert_eq!(waves[0], vec![(a, InitSource::Dirac), (b, InitSource::Dirac)]);
    assert_eq!(waves.iter().map(Vec::len).sum::<usize>(), 16);
}

#[test]
fn zero_seeds_rejected() {
    assert!(plan_grid(split_dims(400, 400, 200, 20), 0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_follows_breadth_first_depth(w in 64usize..1400, h in 64usize..1400, core in 64usize..260, n in 1usize..6, seed in 0u64..1000) {
        let plan = plan_grid(split_dims(w, h, core, 8), n, seed).unwrap();
        let waves = propagation_order(&plan).unwrap();
        let depth = depths(&plan);
        prop_assert_eq!(&depth, &bfs_distance(&plan));
        prop_assert_eq!(waves.iter().map(Vec::len).sum::<usize>(), plan.grid.len());
        for (d, wave) in waves.iter().enumerate() {
            for &(t, source) in wave {
                match source {
                    InitSource::Dirac => prop_assert!(d == 0 && plan.seeds.contains(&t)),
                    InitSource::Neighbour(from) => {
                        prop_assert!(plan.grid.neighbours(t).contains(&from));
                        prop_assert_eq!(depth[from] + 1, d);
                        let lowest = plan.grid.neighbours(t).into_iter().find(|&m| depth[m] + 1 == d);
                        prop_assert_eq!(Some(from), lowest);
                    }
                }
            }
        }
    }

    #[test]
    fn seeds_are_distinct_and_interior(w in 200usize..1600, h in 200usize..1600, n in 1usize..12, seed in 0u64..1000) {
        let plan = plan_grid(split_dims(w, h, 100, 10), n, seed).unwrap();
        let g = &plan.grid;
        let pool = if g.rows <= 2 || g.cols <= 2 { g.len() } else { (g.rows - 2) * (g.cols - 2) };
        prop_assert_eq!(plan.seeds.len(), n.min(pool));
        prop_assert!(plan.seeds.windows(2).all(|s| s[0] < s[1]));
        if g.rows > 2 && g.cols > 2 {
            prop_assert!(plan.seeds.iter().all(|&s| !g.is_boundary(s)));
        }
    }
}

fn quick_cfg() -> EstimationConfig {
    EstimationConfig::default()
}

#[test]
fn uniform_blur_gives_consistent_kernels() {
    let sharp = fiber_phantom(600, 600, 4);
    let truth = Kernel::gaussian(15, 2.0);
    let blurred = convolve2d(&sharp, &truth, BoundaryMode::Replicate).unwrap();
    let plan = plan_tiles(&blurred, 200, 20, 2, 5).unwrap();
    let plan = estimate_all(&blurred, plan, &quick_cfg()).unwrap();
    assert!(plan.is_complete());
    let kernels = plan.kernels().unwrap();
    for (i, a) in kernels.iter().enumerate() {
        for b in &kernels[i + 1..] {
            let tv = a.tv_distance(b);
            assert!(tv < 0.15, "pairwise tv {tv}");
        }
    }
    for (t, e) in plan.estimates.iter().enumerate() {
        let e = e.as_ref().unwrap();
        assert!(!e.fallback);
        let outer = plan.grid.tiles[t].outer;
        match plan.assignment[t] {
            TileStatus::Seed => assert!(e.levels.len() > 1),
            TileStatus::Propagated { .. } => {
                assert_eq!(e.levels.len(), 1);
                assert_eq!((e.levels[0].width, e.levels[0].height), (outer.width, outer.height));
            }
            TileStatus::Pending => panic!("tile {t} left pending"),
        }
        assert!((e.sigma - fit_gaussian_likelihood(&e.kernel)).abs() < 1e-12);
    }
}

#[test]
fn sharp_image_gives_delta_everywhere() {
    let sharp = fiber_phantom(600, 400, 6);
    let plan = plan_tiles(&sharp, 200, 20, 1, 1).unwrap();
    let plan = estimate_all(&sharp, plan, &quick_cfg()).unwrap();
    for k in plan.kernels().unwrap() {
        let tv = k.tv_distance(&Kernel::delta(k.side()));
        assert!(tv < 0.1, "tv to delta {tv}");
    }
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let img = convolve2d(&fiber_phantom(420, 420, 9), &Kernel::gaussian(9, 1.2), BoundaryMode::Replicate).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let plan = plan_tiles(&img, 140, 12, 2, 17).unwrap();
            estimate_all(&img, plan, &quick_cfg()).unwrap()
        })
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.seeds, b.seeds);
    assert_eq!(a.assignment, b.assignment);
    for (x, y) in a.kernels().unwrap().into_iter().zip(b.kernels().unwrap()) {
        assert_eq!(x.weights(), y.weights());
    }
}

#[test]
fn all_seeds_mode_runs_full_pyramid_everywhere() {
    let img = fiber_phantom(300, 300, 2);
    let plan = plan_tiles(&img, 100, 10, 1, 0).unwrap();
    let plan = estimate_all_with(&img, plan, &quick_cfg(), PropagationMode::AllSeeds).unwrap();
    assert!(plan.assignment.iter().all(|s| *s == TileStatus::Seed));
    assert!(plan.estimates.iter().all(|e| e.as_ref().unwrap().levels.len() > 1));
}

#[test]
fn mismatched_image_rejected() {
    let plan = plan_grid(split_dims(400, 400, 200, 20), 1, 0).unwrap();
    let img = Image::filled(300, 400, 1, 0.5).unwrap();
    assert!(estimate_all(&img, plan, &quick_cfg()).is_err());
}

#[test]
fn plan_sidecar_lists_every_tile() {
    let img = fiber_phantom(300, 200, 1);
    let plan = plan_tiles(&img, 100, 10, 2, 7).unwrap();
    let plan = estimate_all(&img, plan, &quick_cfg()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    plan.write_json(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["core_size"], 100);
    assert_eq!(v["seeds"].as_array().unwrap().len(), plan.seeds.len());
    let tiles = v["tiles"].as_array().unwrap();
    assert_eq!(tiles.len(), 6);
    for (t, dump) in tiles.iter().enumerate() {
        assert_eq!(dump["seed"], plan.seeds.contains(&t));
        assert!(dump["sigma"].as_f64().unwrap() >= 0.0);
        assert_eq!(dump["outer"]["width"], plan.grid.tiles[t].outer.width);
    }
}
