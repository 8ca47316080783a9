//! Fast self-checks of the numerical core against independent oracles.

use mmdn::hybrid::quantile;
use mmdn::kernels::{spectral_moments, KernelSpec};
use mmdn::linalg::{sym_eigenvalues, Matrix};
use mmdn::metrics::{equivalent_evals, BudgetLedger};
use mmdn::mmd::{hessian_block_bounds, mmd_grad_decision, mmd_grad_objective, mmd_hess_objective, mmd_sq};
use mmdn::moea::nondominated_sort;
use mmdn::newton::precondition;
use mmdn::problems::{evaluate_set, front_sample, make_problem};
use mmdn::refset::{detect_components, shift_direction, ReferenceSetConfig};
use mmdn::{ObjectivePointSet, StackedDecision};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

type Check = (&'static str, fn() -> Result<String, String>);

fn set(v: &[[f64; 2]]) -> ObjectivePointSet {
    ObjectivePointSet::from_points(&v.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn random_set(rng: &mut Pcg64, len: usize, dim: usize) -> ObjectivePointSet {
    ObjectivePointSet::new(dim, (0..len * dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn objective_derivatives() -> Result<String, String> {
    let mut rng = Pcg64::seed_from_u64(1);
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let y = random_set(&mut rng, 3, 2);
    let r = random_set(&mut rng, 4, 2);
    let g = mmd_grad_objective(&y, &r, &kernel).unwrap();
    let h = mmd_hess_objective(&y, &r, &kernel).unwrap();
    let f = |d: &[(usize, f64)]| {
        let mut yy = y.clone();
        for &(i, v) in d {
            yy.as_flat_mut()[i] += v;
        }
        mmd_sq(&yy, &r, &kernel).unwrap()
    };
    let (s, t) = (1e-6, 1e-4);
    let mut worst_g: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for a in 0..6 {
        let fd = (f(&[(a, s)]) - f(&[(a, -s)])) / (2.0 * s);
        worst_g = worst_g.max((g.as_slice()[a] - fd).abs() / fd.abs().max(1e-3));
        for b in 0..6 {
            let fd2 = (f(&[(a, t), (b, t)]) - f(&[(a, t), (b, -t)]) - f(&[(a, -t), (b, t)]) + f(&[(a, -t), (b, -t)]))
                / (4.0 * t * t);
            worst_h = worst_h.max((h[(a, b)] - fd2).abs());
        }
    }
    ensure(worst_g <= 1e-5 && worst_h <= 1e-4, format!("gradient rel. error {worst_g:.1e}, Hessian abs. error {worst_h:.1e}"))
}

fn decision_gradient() -> Result<String, String> {
    let p = make_problem("zdt1", Some(4)).unwrap();
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let x = StackedDecision::new(4, vec![0.2, 0.1, 0.3, 0.4, 0.7, 0.5, 0.2, 0.1]).unwrap();
    let r = front_sample(&p, 2).unwrap();
    let g = mmd_grad_decision(&x, &p, &r, &kernel).unwrap().stacked;
    let f = |xx: &StackedDecision| mmd_sq(&evaluate_set(&p, xx).unwrap(), &r, &kernel).unwrap();
    let s = 1e-6;
    let mut worst: f64 = 0.0;
    for a in 0..8 {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp.as_flat_mut()[a] += s;
        xm.as_flat_mut()[a] -= s;
        let fd = (f(&xp) - f(&xm)) / (2.0 * s);
        worst = worst.max((g[a] - fd).abs() / fd.abs().max(1e-3));
    }
    ensure(worst <= 1e-5, format!("zdt1 rel. error {worst:.1e}"))
}

fn stationarity() -> Result<String, String> {
    let y = set(&[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]);
    let r = set(&[[0.0, 1.0], [0.0, -1.0]]);
    let g = mmd_grad_objective(&y, &r, &KernelSpec::gaussian(1.0).unwrap()).unwrap();
    let worst = g.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(worst <= 1e-12, format!("|grad| of the centre {worst:.1e}"))
}

fn spectrum() -> Result<String, String> {
    let mut rng = Pcg64::seed_from_u64(2);
    for _ in 0..20 {
        let mu = rng.gen_range(1..=5);
        let k = rng.gen_range(2..=3);
        let kernel = KernelSpec::gaussian(rng.gen_range(0.1..3.0)).unwrap();
        let (y, r) = (random_set(&mut rng, mu, k), random_set(&mut rng, mu, k));
        let h = mmd_hess_objective(&y, &r, &kernel).unwrap();
        let radii = hessian_block_bounds(&y, &r, &kernel).unwrap().radii;
        for e in sym_eigenvalues(&h).unwrap() {
            if !radii.iter().any(|&rad| e.abs() <= rad + 1e-8) {
                return Err(format!("eigenvalue {e} outside every radius"));
            }
        }
    }
    Ok("20 random instances".into())
}

fn moments() -> Result<String, String> {
    let m = spectral_moments::<f64>(&KernelSpec::gaussian(0.7).unwrap(), 3).unwrap();
    ensure(m.m2 == 2.0 * 0.7 * 3.0, format!("m2 = {}", m.m2))
}

fn preconditioning() -> Result<String, String> {
    let pre = precondition(&Matrix::from_diag(&[-1.0, 2.0])).unwrap();
    ensure(pre.tau == 1.0 + 1e-6 && pre.attempts == 2, format!("tau {} after {} attempts", pre.tau, pre.attempts))
}

fn budget() -> Result<String, String> {
    let v = equivalent_evals(&BudgetLedger::new(0, 10, 10));
    ensure(v == 33.6, format!("{v}"))
}

fn shift() -> Result<String, String> {
    let eta = shift_direction(&set(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
    let want = -1.0 / 2f64.sqrt();
    ensure(eta.iter().all(|e| (e - want).abs() <= 1e-10), format!("{eta:?}"))
}

fn components() -> Result<String, String> {
    let p = make_problem("zdt3", None).unwrap();
    let y = front_sample(&p, 100).unwrap();
    let c = detect_components(&y, &ReferenceSetConfig::default()).unwrap();
    ensure(c.len() == 5, format!("{} components on zdt3", c.len()))
}

fn sorting() -> Result<String, String> {
    let fronts = nondominated_sort(&set(&[[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]));
    ensure(fronts == vec![vec![0, 1], vec![2]], format!("{fronts:?}"))
}

fn quantiles() -> Result<String, String> {
    let v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let q = [0.5, 0.1, 0.9].map(|q| quantile(&v, q).unwrap());
    let ok = (q[0] - 0.55).abs() < 1e-12 && (q[1] - 0.19).abs() < 1e-12 && (q[2] - 0.91).abs() < 1e-12;
    ensure(ok, format!("median {:.4}, q10 {:.4}, q90 {:.4}", q[0], q[1], q[2]))
}

const CHECKS: [Check; 11] = [
    ("objective-space MMD derivatives vs finite differences", objective_derivatives),
    ("decision-space MMD gradient vs finite differences", decision_gradient),
    ("symmetric configuration is stationary", stationarity),
    ("Hessian spectrum within the radius bounds", spectrum),
    ("Gaussian second spectral moment", moments),
    ("preconditioning of diag(-1, 2)", preconditioning),
    ("equivalent evaluations of (0, 10, 10)", budget),
    ("shift direction of the unit extremes", shift),
    ("zdt3 front components", components),
    ("nondominated sorting example", sorting),
    ("linear-interpolation quantiles", quantiles),
];

/// Prints one line per check; true when all pass.
pub fn run_all() -> bool {
    let mut all = true;
    for (name, f) in CHECKS {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                all = false;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    all
}
