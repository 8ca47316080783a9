use mmdn::moea::{crowding_distance, nondominated_sort, nsga2_run, MoeaConfig, Nsga2};
use mmdn::points::{distance, dominates};
use mmdn::problems::{front_sample, make_problem, Problem};
use mmdn::ObjectivePointSet;
use proptest::prelude::*;

fn set(v: &[Vec<f64>]) -> ObjectivePointSet {
    ObjectivePointSet::from_points(v).unwrap()
}

fn brute_force_fronts(pts: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..pts.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> =
            left.iter().copied().filter(|&i| !left.iter().any(|&j| dominates(&pts[j], &pts[i]))).collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

#[test]
fn sort_examples() {
    let fronts = nondominated_sort(&set(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]));
    assert_eq!(fronts, vec![vec![0, 1], vec![2]]);
    let same = nondominated_sort(&set(&vec![vec![0.3, 0.3]; 4]));
    assert_eq!(same, vec![vec![0, 1, 2, 3]]);
}

#[test]
fn crowding_examples() {
    let two = crowding_distance(&set(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
    assert!(two.iter().all(|d| d.is_infinite()));
    let three = crowding_distance(&set(&[vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]]));
    assert_eq!(three[1], 2.0);
    assert!(three[0].is_infinite() && three[2].is_infinite());
    let flat = crowding_distance(&set(&[vec![0.0, 5.0], vec![1.0, 5.0], vec![3.0, 5.0]]));
    assert_eq!(flat[1], 1.0);
}

#[test]
fn zero_generations_is_the_initial_population() {
    let p = make_problem("zdt1", None).unwrap();
    let cfg = MoeaConfig { pop_size: 12, seed: 5, ..MoeaConfig::default() };
    let pop = nsga2_run(&p, &cfg, 0).unwrap();
    assert_eq!(pop.eval_count, 12);
    assert_eq!(pop.generation, 0);
    assert_eq!(pop.individuals.len(), 12);
}

#[test]
fn eval_count_and_bounds() {
    for name in ["zdt4", "dtlz1", "toy-biobj"] {
        let p = make_problem(name, None).unwrap();
        let cfg = MoeaConfig { pop_size: 10, seed: 1, ..MoeaConfig::default() };
        let pop = nsga2_run(&p, &cfg, 15).unwrap();
        assert_eq!(pop.eval_count, 10 * 16);
        for ind in &pop.individuals {
            for ((x, lo), hi) in ind.x.iter().zip(p.lower()).zip(p.upper()) {
                assert!(lo <= x && x <= hi);
            }
            assert_eq!(ind.f, p.evaluate(&ind.x));
        }
    }
}

#[test]
fn same_seed_same_population() {
    let p = make_problem("dtlz2", None).unwrap();
    let cfg = MoeaConfig { pop_size: 20, seed: 77, ..MoeaConfig::default() };
    let a = nsga2_run(&p, &cfg, 10).unwrap();
    let b = nsga2_run(&p, &cfg, 10).unwrap();
    assert_eq!(a, b);
    let c = nsga2_run(&p, &MoeaConfig { seed: 78, ..cfg }, 10).unwrap();
    assert_ne!(a, c);
}

#[test]
fn forked_runs_continue_identically() {
    let p = make_problem("zdt2", None).unwrap();
    let cfg = MoeaConfig { pop_size: 16, seed: 3, ..MoeaConfig::default() };
    let mut run = Nsga2::new(&p, &cfg).unwrap();
    for _ in 0..5 {
        run.step().unwrap();
    }
    let mut fork = run.clone();
    for _ in 0..4 {
        run.step().unwrap();
        fork.step().unwrap();
    }
    assert_eq!(run.population(), fork.population());
    assert_eq!(run.population(), &nsga2_run(&p, &cfg, 9).unwrap());
}

#[test]
fn elitism_never_regresses() {
    let p = make_problem("zdt1", None).unwrap();
    let cfg = MoeaConfig { pop_size: 20, seed: 9, ..MoeaConfig::default() };
    let mut run = Nsga2::new(&p, &cfg).unwrap();
    for _ in 0..40 {
        let before: Vec<Vec<f64>> =
            run.population().individuals.iter().filter(|i| i.rank == 0).map(|i| i.f.clone()).collect();
        run.step().unwrap();
        for ind in run.population().individuals.iter().filter(|i| i.rank == 0) {
            assert!(!before.iter().any(|b| dominates(b, &ind.f)));
        }
    }
}

#[test]
fn zdt1_gets_close_to_the_front() {
    let p = make_problem("zdt1", None).unwrap();
    let front = front_sample(&p, 1000).unwrap();
    let mut medians = Vec::new();
    let mut spreads = Vec::new();
    for seed in 0..12 {
        let pop = nsga2_run(&p, &MoeaConfig { pop_size: 40, seed, ..MoeaConfig::default() }, 100).unwrap();
        let f1: Vec<f64> = pop.individuals.iter().map(|i| i.f[0]).collect();
        let spread = f1.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - f1.iter().cloned().fold(f64::INFINITY, f64::min);
        spreads.push(spread);
        let mut dist: Vec<f64> = pop
            .individuals
            .iter()
            .map(|i| front.iter().map(|f| distance(&i.f, f)).fold(f64::INFINITY, f64::min))
            .collect();
        dist.sort_by(f64::total_cmp);
        let median = 0.5 * (dist[19] + dist[20]);
        assert!(median < 0.2, "seed {seed}: median distance {median}");
        medians.push(median);
    }
    medians.sort_by(f64::total_cmp);
    let across = 0.5 * (medians[5] + medians[6]);
    assert!(across < 0.1, "median over seeds {across}");
    spreads.sort_by(f64::total_cmp);
    assert!(0.5 * (spreads[5] + spreads[6]) >= 0.8, "{spreads:?}");
}

#[test]
fn csv_has_one_row_per_individual() {
    let p = make_problem("zdt1", Some(3)).unwrap();
    let pop = nsga2_run(&p, &MoeaConfig { pop_size: 6, ..MoeaConfig::default() }, 2).unwrap();
    let mut buf = Vec::new();
    pop.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,x3,f1,f2,rank,crowding");
    assert_eq!(lines.len(), 7);
}

#[test]
fn invalid_configs_are_rejected() {
    let p = make_problem("zdt1", None).unwrap();
    for cfg in [
        MoeaConfig { pop_size: 1, ..MoeaConfig::default() },
        MoeaConfig { crossover_prob: 1.5, ..MoeaConfig::default() },
        MoeaConfig { mutation_eta: 0.5, ..MoeaConfig::default() },
    ] {
        assert!(nsga2_run(&p, &cfg, 1).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sort_matches_brute_force(pts in prop::collection::vec(prop::collection::vec(0u8..6, 3), 1..60)) {
        // small integer grid so ties and duplicates are common
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
        let fronts = nondominated_sort(&set(&pts));
        let mut sorted: Vec<Vec<usize>> = fronts.into_iter().map(|mut f| { f.sort(); f }).collect();
        sorted.iter_mut().for_each(|f| f.sort());
        prop_assert_eq!(sorted, brute_force_fronts(&pts));
    }
}
