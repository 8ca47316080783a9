//! Objective definitions, written once over [`Real`].

use std::f64::consts::PI;

use crate::ad::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Zdt1,
    Zdt2,
    Zdt3,
    Zdt4,
    Dtlz1,
    Dtlz2,
    Dtlz3,
    Dtlz4,
    Dtlz5,
    Dtlz6,
    Dtlz7,
    ToyBiobj,
}

impl Benchmark {
    pub const ALL: [Benchmark; 12] = [
        Benchmark::Zdt1,
        Benchmark::Zdt2,
        Benchmark::Zdt3,
        Benchmark::Zdt4,
        Benchmark::Dtlz1,
        Benchmark::Dtlz2,
        Benchmark::Dtlz3,
        Benchmark::Dtlz4,
        Benchmark::Dtlz5,
        Benchmark::Dtlz6,
        Benchmark::Dtlz7,
        Benchmark::ToyBiobj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Zdt1 => "zdt1",
            Benchmark::Zdt2 => "zdt2",
            Benchmark::Zdt3 => "zdt3",
            Benchmark::Zdt4 => "zdt4",
            Benchmark::Dtlz1 => "dtlz1",
            Benchmark::Dtlz2 => "dtlz2",
            Benchmark::Dtlz3 => "dtlz3",
            Benchmark::Dtlz4 => "dtlz4",
            Benchmark::Dtlz5 => "dtlz5",
            Benchmark::Dtlz6 => "dtlz6",
            Benchmark::Dtlz7 => "dtlz7",
            Benchmark::ToyBiobj => "toy-biobj",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        Self::ALL.into_iter().find(|b| b.name() == lower)
    }

    pub fn is_zdt(self) -> bool {
        matches!(self, Benchmark::Zdt1 | Benchmark::Zdt2 | Benchmark::Zdt3 | Benchmark::Zdt4)
    }

    pub fn is_dtlz(self) -> bool {
        !self.is_zdt() && self != Benchmark::ToyBiobj
    }

    /// Number of objectives: 2 for ZDT and the toy problem, 3 for DTLZ.
    pub fn n_obj(self) -> usize {
        if self.is_dtlz() {
            3
        } else {
            2
        }
    }

    pub fn default_n_var(self) -> usize {
        let m = self.n_obj();
        match self {
            Benchmark::Zdt1 | Benchmark::Zdt2 | Benchmark::Zdt3 => 30,
            Benchmark::Zdt4 => 10,
            Benchmark::Dtlz1 => m + 4,
            Benchmark::Dtlz7 => m + 19,
            Benchmark::ToyBiobj => 2,
            _ => m + 9,
        }
    }

    pub fn min_n_var(self) -> usize {
        match self {
            Benchmark::ToyBiobj => 2,
            b if b.is_zdt() => 2,
            b => b.n_obj(),
        }
    }

    pub fn max_n_var(self) -> usize {
        match self {
            Benchmark::ToyBiobj => 2,
            _ => usize::MAX,
        }
    }

    pub fn bounds(self, n: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Benchmark::ToyBiobj => (vec![-2.0; n], vec![2.0; n]),
            Benchmark::Zdt4 => {
                let mut lo = vec![-5.0; n];
                let mut hi = vec![5.0; n];
                lo[0] = 0.0;
                hi[0] = 1.0;
                (lo, hi)
            }
            _ => (vec![0.0; n], vec![1.0; n]),
        }
    }

    pub fn objectives<R: Real>(self, x: &[R]) -> Vec<R> {
        match self {
            Benchmark::ToyBiobj => toy(x),
            b if b.is_zdt() => zdt(b, x),
            b => dtlz(b, x, b.n_obj()),
        }
    }
}

fn sum<'a, R: Real + 'a>(zero: R, terms: impl Iterator<Item = R>) -> R {
    terms.fold(zero, |acc, t| acc + t)
}

fn toy<R: Real>(x: &[R]) -> Vec<R> {
    let f1 = (x[0].clone() - 1.0).powi(2) + (x[1].clone() - 1.0).powi(2);
    let f2 = (x[0].clone() + 1.0).powi(2) + (x[1].clone() + 1.0).powi(2);
    vec![f1, f2]
}

fn zdt<R: Real>(kind: Benchmark, x: &[R]) -> Vec<R> {
    let n = x.len();
    let f1 = x[0].clone();
    let zero = f1.constant_like(0.0);
    let g = match kind {
        Benchmark::Zdt4 => {
            let s = sum(zero, x[1..].iter().map(|xi| xi.clone().powi(2) - (xi.clone() * (4.0 * PI)).cos() * 10.0));
            s + (1.0 + 10.0 * (n as f64 - 1.0))
        }
        _ => sum(zero, x[1..].iter().cloned()) * (9.0 / (n as f64 - 1.0)) + 1.0,
    };
    let ratio = f1.clone() / g.clone();
    let h = match kind {
        Benchmark::Zdt2 => -ratio.powi(2) + 1.0,
        Benchmark::Zdt3 => -ratio.sqrt() - ratio * (f1.clone() * (10.0 * PI)).sin() + 1.0,
        _ => -ratio.sqrt() + 1.0,
    };
    vec![f1, g * h]
}

fn dtlz<R: Real>(kind: Benchmark, x: &[R], m: usize) -> Vec<R> {
    let zero = x[0].constant_like(0.0);
    let tail = &x[m - 1..];
    let rastrigin_g = || {
        let s = sum(
            zero.clone(),
            tail.iter().map(|xi| (xi.clone() - 0.5).powi(2) - ((xi.clone() - 0.5) * (20.0 * PI)).cos()),
        );
        (s + tail.len() as f64) * 100.0
    };
    let sphere_g = || sum(zero.clone(), tail.iter().map(|xi| (xi.clone() - 0.5).powi(2)));

    match kind {
        Benchmark::Dtlz1 => {
            let scale = (rastrigin_g() + 1.0) * 0.5;
            (0..m)
                .map(|i| {
                    let mut f = scale.clone();
                    for xj in &x[..m - 1 - i] {
                        f = f * xj.clone();
                    }
                    if i > 0 {
                        f = f * (-x[m - 1 - i].clone() + 1.0);
                    }
                    f
                })
                .collect()
        }
        Benchmark::Dtlz7 => {
            let g = sum(zero.clone(), tail.iter().cloned()) * (9.0 / tail.len() as f64) + 1.0;
            let mut out: Vec<R> = x[..m - 1].to_vec();
            let h = sum(
                zero.clone(),
                out.iter().map(|fi| fi.clone() / (g.clone() + 1.0) * ((fi.clone() * (3.0 * PI)).sin() + 1.0)),
            );
            out.push((g + 1.0) * (-h + m as f64));
            out
        }
        _ => {
            let g = match kind {
                Benchmark::Dtlz3 => rastrigin_g(),
                Benchmark::Dtlz6 => sum(zero.clone(), tail.iter().map(|xi| xi.powf(0.1))),
                _ => sphere_g(),
            };
            let angles: Vec<R> = match kind {
                Benchmark::Dtlz4 => x[..m - 1].iter().map(|xi| xi.powi(100)).collect(),
                Benchmark::Dtlz5 | Benchmark::Dtlz6 => x[..m - 1]
                    .iter()
                    .enumerate()
                    .map(|(j, xj)| {
                        if j == 0 {
                            xj.clone()
                        } else {
                            (g.clone() * xj.clone() * 2.0 + 1.0) / ((g.clone() + 1.0) * 2.0)
                        }
                    })
                    .collect(),
                _ => x[..m - 1].to_vec(),
            };
            let radius = g + 1.0;
            (0..m)
                .map(|i| {
                    let mut f = radius.clone();
                    for a in &angles[..m - 1 - i] {
                        f = f * (a.clone() * (PI / 2.0)).cos();
                    }
                    if i > 0 {
                        f = f * (angles[m - 1 - i].clone() * (PI / 2.0)).sin();
                    }
                    f
                })
                .collect()
        }
    }
}
