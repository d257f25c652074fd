//! Oracles shared by the integration tests and the acceptance run. Nothing
//! here calls the enumeration, dominance or return-time code under test.
#![allow(dead_code)]

use driftwalk::dist::FiniteDist;
use driftwalk::lattice::LatticeBasis;
use driftwalk::linalg::Mat;
use rand::Rng;

// ---------------------------------------------------------------- laws

/// Random law with at most `max_atoms` distinct atoms on the grid
/// `k / 4` and dyadic weights, so every partial sum of weights is exact.
pub fn dyadic_dist<R: Rng>(rng: &mut R, max_atoms: usize) -> FiniteDist<f64> {
    const SCALE: u32 = 1 << 20;
    let n = rng.random_range(1..=max_atoms);
    let mut values: Vec<i32> = Vec::new();
    while values.len() < n {
        let v = rng.random_range(-40..=40);
        if !values.contains(&v) {
            values.push(v);
        }
    }
    let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.random_range(1..SCALE)).collect();
    cuts.push(0);
    cuts.push(SCALE);
    cuts.sort_unstable();
    cuts.dedup();
    let widths: Vec<u32> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
    let atoms = values.iter().zip(&widths).map(|(&v, &w)| (v as f64 / 4.0, w as f64 / SCALE as f64));
    FiniteDist::new(atoms).unwrap()
}

/// `P(Z > t)` by direct summation.
pub fn tail_oracle(z: &FiniteDist<f64>, t: f64) -> f64 {
    z.atoms().filter(|(v, _)| *v > t).map(|(_, w)| w).sum()
}

/// `P(Z >= t)` by direct summation.
pub fn tail_ge_oracle(z: &FiniteDist<f64>, t: f64) -> f64 {
    z.atoms().filter(|(v, _)| *v >= t).map(|(_, w)| w).sum()
}

/// `Z'(s) = max{t : P(Z >= t) >= s}` by scanning the atoms.
pub fn realisation_oracle(z: &FiniteDist<f64>, s: f64) -> f64 {
    z.values().iter().copied().filter(|&t| tail_ge_oracle(z, t) >= s).fold(f64::NEG_INFINITY, f64::max)
}

/// `lower <= upper` in the usual stochastic order, tested at every atom.
pub fn dominated_oracle(lower: &FiniteDist<f64>, upper: &FiniteDist<f64>, tol: f64) -> bool {
    lower.values().iter().chain(upper.values()).all(|&t| tail_oracle(lower, t) <= tail_oracle(upper, t) + tol)
}

// ------------------------------------------------------- reflected walks

/// Exact laws of `x -> max(0, x + Z)` for integer `Z`, by propagating the
/// distribution over `0..states`.
pub struct ReflectedDp {
    steps: Vec<(i64, f64)>,
    states: usize,
}

impl ReflectedDp {
    pub fn new(z: &FiniteDist<f64>, states: usize) -> Self {
        Self { steps: z.atoms().map(|(v, w)| (v as i64, w)).collect(), states }
    }

    fn push(&self, p: &[f64], killed_at_or_below: Option<i64>) -> Vec<f64> {
        let mut q = vec![0.0; self.states];
        for (x, &m) in p.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(s, w) in &self.steps {
                let y = (x as i64 + s).max(0);
                assert!((y as usize) < self.states, "state space too small");
                q[y as usize] += m * w;
            }
        }
        if let Some(r0) = killed_at_or_below {
            for m in q.iter_mut().take(r0 as usize + 1) {
                *m = 0.0;
            }
        }
        q
    }

    fn point(&self, x0: i64) -> Vec<f64> {
        let mut p = vec![0.0; self.states];
        p[x0 as usize] = 1.0;
        p
    }

    /// `P(X_n = y)` for `n = 0..=horizon`.
    pub fn marginals(&self, x0: i64, horizon: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.point(x0)];
        for n in 0..horizon {
            let next = self.push(&out[n], None);
            out.push(next);
        }
        out
    }

    /// `P(tau >= n)` for `n = 0..=horizon`, `tau = min{n >= 1 : X_n <= r0}`.
    pub fn return_tail(&self, x0: i64, r0: i64, horizon: usize) -> Vec<f64> {
        let mut alive = self.point(x0);
        let mut out = vec![1.0];
        for _ in 0..horizon {
            // P(tau >= n + 1) = P(tau > n)
            out.push(alive.iter().sum());
            alive = self.push(&alive, Some(r0));
        }
        out
    }

    /// `(E tau, Var tau)`, summing `P(tau > n)` until it drops below `tol`.
    pub fn return_moments(&self, x0: i64, r0: i64, tol: f64) -> (f64, f64) {
        let mut alive = self.push(&self.point(x0), Some(r0));
        // P(tau > 0) = 1
        let (mut m1, mut m2) = (1.0, 1.0);
        let mut n = 1.0;
        loop {
            let s: f64 = alive.iter().sum();
            if s < tol {
                break;
            }
            m1 += s;
            m2 += (2.0 * n + 1.0) * s;
            n += 1.0;
            alive = self.push(&alive, Some(r0));
        }
        (m1, m2 - m1 * m1)
    }
}

// ---------------------------------------------------------------- lattices

/// `d x d` matrix with entries uniform in `[-1, 1]`, rescaled to `|det| = 1`,
/// rejected above condition number `max_cond`.
pub fn random_lattice<R: Rng>(d: usize, max_cond: f64, rng: &mut R) -> LatticeBasis<f64> {
    loop {
        let m: Mat<f64> = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        if m.det().abs() < 1e-3 || m.cond() > max_cond {
            continue;
        }
        if let Ok(b) = LatticeBasis::normalized(m) {
            return b;
        }
    }
}

/// Random element of `GL_d(Z)` as a product of elementary moves.
pub fn random_unimodular<R: Rng>(d: usize, moves: usize, rng: &mut R) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..moves {
        let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
        if i == j {
            continue;
        }
        let k = rng.random_range(-2..=2);
        for row in u.iter_mut() {
            row[j] += k * row[i];
        }
        if rng.random_bool(0.2) {
            for row in u.iter_mut() {
                row.swap(i, j);
            }
        }
    }
    u
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn gcd_vec(v: &[i64]) -> i64 {
    v.iter().fold(0, |g, &x| gcd(g, x))
}

/// Sign-normalised Plucker vector: determines a primitive sublattice.
pub fn plucker_key(rows: &[Vec<i64>]) -> Vec<i64> {
    let d = rows[0].len();
    let mut p = match rows.len() {
        1 => rows[0].clone(),
        2 => {
            let mut p = Vec::new();
            for a in 0..d {
                for b in a + 1..d {
                    p.push(rows[0][a] * rows[1][b] - rows[0][b] * rows[1][a]);
                }
            }
            p
        }
        r => panic!("rank {r} keys are not needed"),
    };
    if p.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        p.iter_mut().for_each(|x| *x = -*x);
    }
    p
}

fn real_vector(m: &Mat<f64>, c: &[i64]) -> Vec<f64> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)] * c[j] as f64).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All coefficient vectors `c != 0` with `|B c| <= bound`, from the box
/// `|c_j| <= bound * |row_j(B^-1)|`.
pub fn box_vectors(m: &Mat<f64>, bound: f64) -> Vec<(Vec<i64>, Vec<f64>, f64)> {
    let d = m.rows();
    let inv = m.inverse().unwrap();
    let limits: Vec<i64> =
        (0..d).map(|j| (bound * (0..d).map(|k| inv[(j, k)].powi(2)).sum::<f64>().sqrt()).floor() as i64).collect();
    let mut out = Vec::new();
    let mut c: Vec<i64> = limits.iter().map(|l| -l).collect();
    loop {
        if c.iter().any(|&x| x != 0) {
            let v = real_vector(m, &c);
            let n = dot(&v, &v).sqrt();
            if n <= bound * (1.0 + 1e-12) {
                out.push((c.clone(), v, n));
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                return out;
            }
            c[k] += 1;
            if c[k] <= limits[k] {
                break;
            }
            c[k] = -limits[k];
            k += 1;
        }
    }
}

/// `f_A` from its definition with candidates from coefficient boxes. A
/// rank-`i` sublattice of covolume `V` has a basis of vectors of norm at most
/// `i^(3/2) gamma_i V / m^(i-1)` (`m` the first minimum, `gamma_i` the
/// Hermite constant); for rank 2 the shorter vector also satisfies
/// `|v_1|^2 <= gamma_2 V`.
/// Returns `(f_A, Plucker key of the maximiser)`.
pub fn brute_force_fa(x: &LatticeBasis<f64>, a: f64, exponents: &[f64]) -> (f64, Option<Vec<i64>>) {
    let m = x.matrix();
    let d = m.rows();
    assert!(d == 2 || d == 3, "oracle covers d = 2, 3");
    let gamma2 = 2.0 / 3f64.sqrt();
    let mut best: Option<(f64, usize, Vec<i64>)> = None;
    let mut offer = |phi: f64, rank: usize, key: Vec<i64>| {
        let better = match &best {
            None => true,
            Some((b, r, k)) => phi > *b || (phi == *b && (rank, &key) < (*r, k)),
        };
        if better {
            best = Some((phi, rank, key));
        }
    };
    for i in 1..d {
        let shift = a * (i * (d - i)) as f64;
        let v_max = (-shift).exp();
        let phi = |covol: f64| -(shift + covol.ln()) / exponents[i - 1];
        if i == 1 {
            for (c, _, n) in box_vectors(m, v_max) {
                if n < v_max && gcd_vec(&c) == 1 {
                    offer(phi(n), 1, plucker_key(&[c]));
                }
            }
        } else {
            let shortest = (0..d).map(|j| dot(&m.col(j), &m.col(j)).sqrt()).fold(f64::INFINITY, f64::min);
            let first_min = box_vectors(m, shortest).iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
            let b = 2f64.powf(1.5) * gamma2 * v_max / first_min;
            let long = box_vectors(m, b);
            let short_bound = (gamma2 * v_max).sqrt();
            let mut seen = std::collections::HashSet::new();
            for (cu, u, nu) in long.iter().filter(|t| t.2 <= short_bound * (1.0 + 1e-12)) {
                for (cv, v, nv) in &long {
                    if nv < nu {
                        continue;
                    }
                    let key = plucker_key(&[cu.clone(), cv.clone()]);
                    if gcd_vec(&key) != 1 {
                        continue;
                    }
                    let gram = dot(u, u) * dot(v, v) - dot(u, v).powi(2);
                    let covol = gram.max(0.0).sqrt();
                    if covol < v_max && seen.insert(key.clone()) {
                        offer(phi(covol), 2, key);
                    }
                }
            }
        }
    }
    match best {
        Some((phi, _, key)) if phi > 0.0 => (phi, Some(key)),
        _ => (0.0, None),
    }
}
