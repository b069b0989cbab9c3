#![allow(dead_code)]

use std::path::PathBuf;

use crnscope_core::model::{MassActionSystem, Reaction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use crnscope_core::netparse::{parse_decomposition, parse_network, DecompositionDocument, NetworkDocument};

pub fn networks_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks")
}

pub fn load(name: &str) -> NetworkDocument {
    let path = networks_dir().join(format!("{name}.crn"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_network(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load_with_x(name: &str) -> (MassActionSystem, Vec<f64>) {
    let doc = load(name);
    let x = doc.equilibrium.clone().expect("fixture declares an equilibrium");
    (doc.system, x)
}

pub fn load_decomposition(name: &str, parent: &MassActionSystem) -> DecompositionDocument {
    let path = networks_dir().join(format!("{name}.dcmp.json"));
    let text = std::fs::read_to_string(&path).unwrap();
    parse_decomposition(&text, parent, true).unwrap()
}

/// The n-cycle `S_i ⇄ S_{i+1}` (rates 1 and 2) with `S_i + S_{i+1} → 2 S_{i+1}`.
pub fn cycle(n: usize) -> MassActionSystem {
    let names: Vec<String> = (1..=n).map(|i| format!("S{i}")).collect();
    let e = |i: usize, c: u32| {
        let mut v = vec![0; n];
        v[i] += c;
        v
    };
    let mut reactions = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        reactions.push(Reaction::new(e(i, 1), e(j, 1), 1.0));
        reactions.push(Reaction::new(e(j, 1), e(i, 1), 2.0));
        let mut r = e(i, 1);
        r[j] += 1;
        reactions.push(Reaction::new(r, e(j, 2), 1.0));
    }
    MassActionSystem::new(names, reactions).unwrap()
}

/// Random autocatalytic network on a random species graph. About half of
/// the pairs are rebalanced at `x` so that both outcomes occur.
pub fn random_autocatalytic(rng: &mut ChaCha8Rng) -> (MassActionSystem, Vec<f64>) {
    let n = rng.gen_range(2..=5);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|j| (rng.gen_range(0..j), j)).collect();
    if n > 2 && rng.gen_bool(0.5) {
        edges.push((0, n - 1));
    }
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
    let mut reactions = Vec::new();
    let react = |i: usize, j: usize, alpha: u32, k: f64| {
        let mut r = vec![0; n];
        r[i] = 1;
        r[j] = alpha - 1;
        let mut p = vec![0; n];
        p[j] = alpha;
        Reaction::new(r, p, k)
    };
    for &(i, j) in &edges {
        let mut fwd = vec![react(i, j, 1, rng.gen_range(0.1..3.0))];
        let mut bwd = vec![react(j, i, 1, rng.gen_range(0.1..3.0))];
        for alpha in 2..=3 {
            if rng.gen_bool(0.5) {
                fwd.push(react(i, j, alpha, rng.gen_range(0.1..3.0)));
            }
            if rng.gen_bool(0.5) {
                bwd.push(react(j, i, alpha, rng.gen_range(0.1..3.0)));
            }
        }
        if rng.gen_bool(0.5) {
            let f: f64 = fwd.iter().map(|r| r.flux(&x)).sum();
            let b: f64 = bwd.iter().map(|r| r.flux(&x)).sum();
            for r in &mut bwd {
                r.rate *= f / b;
            }
        }
        reactions.extend(fwd);
        reactions.extend(bwd);
    }
    let names: Vec<String> = (0..n).map(|i| format!("S{}", i + 1)).collect();
    (MassActionSystem::new(names, reactions).unwrap(), x)
}

/// Brute force: every unordered species pair has equal flux in both
/// directions.
pub fn pairs_balanced_oracle(mas: &MassActionSystem, x: &[f64]) -> bool {
    let n = mas.num_species();
    (0..n).all(|i| {
        (i + 1..n).all(|j| {
            let (mut f, mut b) = (0.0, 0.0);
            for r in mas.reactions() {
                let v = r.reaction_vector();
                if v[i] == -1 && v[j] == 1 {
                    f += r.flux(x);
                } else if v[i] == 1 && v[j] == -1 {
                    b += r.flux(x);
                }
            }
            (f - b).abs() <= 1e-9 * f.max(b).max(1e-300) + 1e-12
        })
    })
}

/// Random network of small complexes. Depending on `mode` the rates are
/// tuned so that `x` is detailed balanced, complex balanced through a
/// cycle of complexes, reaction-vector balanced only, or left arbitrary.
pub fn random_network(rng: &mut ChaCha8Rng) -> Option<(MassActionSystem, Vec<f64>)> {
    let n = rng.gen_range(2..=4);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..2.5)).collect();
    let complex = |rng: &mut ChaCha8Rng| -> Vec<u32> { (0..n).map(|_| rng.gen_range(0..=2)).collect() };
    let mono = |c: &[u32]| -> f64 { c.iter().zip(&x).map(|(&e, &xi)| xi.powi(e as i32)).product() };
    let mut reactions = Vec::new();
    match rng.gen_range(0..5) {
        0 => {
            for _ in 0..rng.gen_range(1..=3) {
                let (a, b) = (complex(rng), complex(rng));
                let kf = rng.gen_range(0.2..3.0);
                let kr = kf * mono(&a) / mono(&b);
                reactions.push(Reaction::new(a.clone(), b.clone(), kf));
                reactions.push(Reaction::new(b, a, kr));
            }
        }
        1 => {
            let len = rng.gen_range(3..=4);
            let cs: Vec<Vec<u32>> = (0..len).map(|_| complex(rng)).collect();
            let flux = rng.gen_range(0.5..2.0);
            for i in 0..len {
                let (a, b) = (cs[i].clone(), cs[(i + 1) % len].clone());
                reactions.push(Reaction::new(a.clone(), b, flux / mono(&a)));
            }
        }
        2 => {
            // a balanced pair plus a balanced cycle
            let (a, b) = (complex(rng), complex(rng));
            let kf = rng.gen_range(0.2..3.0);
            reactions.push(Reaction::new(a.clone(), b.clone(), kf));
            reactions.push(Reaction::new(b.clone(), a.clone(), kf * mono(&a) / mono(&b)));
            let cs: Vec<Vec<u32>> = (0..3).map(|_| complex(rng)).collect();
            for i in 0..3 {
                let c = cs[i].clone();
                reactions.push(Reaction::new(c.clone(), cs[(i + 1) % 3].clone(), 1.0 / mono(&c)));
            }
        }
        3 => {
            // a ⇄ b plus c → c + (a − b): balanced along one reaction vector
            // without being complex balanced in general
            let (a, b) = (complex(rng), complex(rng));
            let c: Vec<u32> = (0..n).map(|i| rng.gen_range(0..=2) + b[i].saturating_sub(a[i])).collect();
            let d: Vec<u32> = (0..n).map(|i| c[i] + a[i] - b[i]).collect();
            let k1 = rng.gen_range(0.2..3.0);
            let k3 = rng.gen_range(0.1..0.9) * k1 * mono(&a) / mono(&c);
            reactions.push(Reaction::new(a.clone(), b.clone(), k1));
            reactions.push(Reaction::new(b.clone(), a.clone(), (k1 * mono(&a) - k3 * mono(&c)) / mono(&b)));
            reactions.push(Reaction::new(c, d, k3));
        }
        _ => {
            for _ in 0..rng.gen_range(2..=5) {
                reactions.push(Reaction::new(complex(rng), complex(rng), rng.gen_range(0.2..3.0)));
            }
        }
    }
    let names: Vec<String> = (0..n).map(|i| format!("S{}", i + 1)).collect();
    MassActionSystem::new(names, reactions).ok().map(|m| (m, x))
}
