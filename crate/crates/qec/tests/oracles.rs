use gkp_qec::inner::{correlated_bin, flip_probability, precision, SERIES_K};
use gkp_qec::lattice::{Boundary, RhgLattice};
use gkp_qec::matching::{dijkstra, exact_matching, extract_syndrome, matching_weight, mwpm};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_covariance(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.4..0.4));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.02
}

// quadratic form through an LU inverse, independent of the Cholesky path
fn form(sigma: &DMatrix<f64>, v: &[f64]) -> f64 {
    let inv = sigma.clone().lu().try_inverse().unwrap();
    let v = nalgebra::DVector::from_column_slice(v);
    (v.transpose() * inv * &v)[(0, 0)]
}

#[test]
fn binning_matches_corner_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.random_range(1..=3);
        let sigma = random_covariance(n, &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = correlated_bin(&x, &sigma).unwrap();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 0..1 << n {
            let q: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { x[i].ceil() } else { x[i].floor() }).collect();
            let d: Vec<f64> = q.iter().zip(&x).map(|(a, b)| a - b).collect();
            let v = form(&sigma, &d);
            if v < best.0 - 1e-12 {
                best = (v, q);
            }
        }
        let gd: Vec<f64> = got.q.iter().zip(&x).map(|(&a, b)| a as f64 - b).collect();
        assert!((form(&sigma, &gd) - best.0).abs() < 1e-9);
    }
}

#[test]
fn diagonal_binning_is_rounding() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.01..1.0)));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let got = correlated_bin(&x, &sigma).unwrap();
        let want: Vec<i64> = x
            .iter()
            .map(|v| if v - v.floor() <= 0.5 { v.floor() as i64 } else { v.ceil() as i64 })
            .collect();
        assert_eq!(got.q, want);
    }
}

#[test]
fn flip_probability_matches_direct_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let sigma = random_covariance(n, &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let q = correlated_bin(&x, &sigma).unwrap().q;
        let prec = precision(&sigma).unwrap().matrix;
        for i in 0..n {
            let fp = flip_probability(i, &x, &q, &prec);
            let got = fp.raw;
            let (mut odd, mut all) = (0.0, 0.0);
            for k in -SERIES_K..=SERIES_K {
                let d: Vec<f64> = (0..n)
                    .map(|j| q[j] as f64 + if j == i { k as f64 } else { 0.0 } - x[j])
                    .collect();
                let w = (-0.5 * form(&sigma, &d)).exp();
                all += w;
                if k % 2 != 0 {
                    odd += w;
                }
            }
            if all > 1e-250 {
                assert!((got - odd / all).abs() < 1e-9, "{got} vs {}", odd / all);
            }
            assert!((0.0..=0.5 + 1e-9).contains(&fp.p));
        }
    }
}

fn random_weights(n: usize, rng: &mut ChaCha8Rng, integer: bool) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if integer { rng.random_range(0..50) as f64 } else { rng.random_range(0.0..20.0) };
            w[i][j] = v;
            w[j][i] = v;
        }
    }
    w
}

fn brute_force(w: &[Vec<f64>], free: &mut Vec<usize>) -> f64 {
    if free.is_empty() {
        return 0.0;
    }
    let i = free.remove(0);
    let mut best = f64::INFINITY;
    for k in 0..free.len() {
        let j = free.remove(k);
        best = best.min(w[i][j] + brute_force(w, free));
        free.insert(k, j);
    }
    free.insert(0, i);
    best
}

fn is_perfect(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    for &(i, j) in pairs {
        if i == j || seen[i] || seen[j] {
            return false;
        }
        seen[i] = true;
        seen[j] = true;
    }
    seen.iter().all(|&s| s)
}

#[test]
fn mwpm_matches_factorial_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let n = 2 * rng.random_range(1..=5);
        let w = random_weights(n, &mut rng, true);
        let m = mwpm(&w).unwrap();
        assert!(is_perfect(n, &m));
        assert_eq!(matching_weight(&w, &m), brute_force(&w, &mut (0..n).collect()));
    }
}

#[test]
fn blossom_agrees_with_exact_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let n = 2 * rng.random_range(8..=10);
        let w = random_weights(n, &mut rng, false);
        let m = mwpm(&w).unwrap();
        assert!(is_perfect(n, &m));
        let exact = matching_weight(&w, &exact_matching(&w));
        // blossom runs on weights quantised to 1e-8 of the largest
        assert!((matching_weight(&w, &m) - exact).abs() < 1e-6, "{} vs {exact}", matching_weight(&w, &m));
    }
}

#[test]
fn mwpm_never_worse_than_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..200 {
        let n = 2 * rng.random_range(1..=9);
        let w = random_weights(n, &mut rng, false);
        let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        edges.sort_by(|a, b| w[a.0][a.1].total_cmp(&w[b.0][b.1]));
        let mut used = vec![false; n];
        let mut greedy = 0.0;
        for (i, j) in edges {
            if !used[i] && !used[j] {
                used[i] = true;
                used[j] = true;
                greedy += w[i][j];
            }
        }
        let m = mwpm(&w).unwrap();
        assert!(matching_weight(&w, &m) <= greedy + 1e-9);
    }
}

#[test]
fn dijkstra_matches_floyd_warshall() {
    let l = RhgLattice::new(3, Boundary::PeriodicTransverse).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let weights: Vec<f64> = (0..l.faces().len()).map(|_| rng.random_range(1e-12..20.0)).collect();
    let n = l.cubes().len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (f, &w) in weights.iter().enumerate() {
        let [a, b] = l.face_cubes(f);
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    for s in 0..n {
        let sp = dijkstra(&l, &weights, s);
        for t in 0..n {
            assert!((sp.dist[t] - d[s][t]).abs() < 1e-9);
            let path_w: f64 = sp.path(&l, t).iter().map(|&f| weights[f]).sum();
            assert!((path_w - sp.dist[t]).abs() < 1e-9);
        }
    }
}

#[test]
fn syndrome_matches_dense_parity_matrix() {
    for d in [3, 5] {
        let l = RhgLattice::new(d, Boundary::PeriodicTransverse).unwrap();
        let period = 2 * d as i64;
        // parity matrix from coordinates: a face bounds a cube when they differ by one step along one axis
        let h: Vec<Vec<u8>> = l
            .cubes()
            .iter()
            .map(|c| {
                l.faces()
                    .iter()
                    .map(|f| {
                        let dx = (c[0] - f[0]).rem_euclid(period);
                        let dy = (c[1] - f[1]).rem_euclid(period);
                        let steps = [dx.min(period - dx), dy.min(period - dy), (c[2] - f[2]).abs()];
                        (steps.iter().sum::<i64>() == 1) as u8
                    })
                    .collect()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(18 + d as u64);
        for _ in 0..50 {
            let bits: Vec<u8> = (0..l.faces().len()).map(|_| rng.random_bool(0.1) as u8).collect();
            let dense: Vec<usize> = h
                .iter()
                .enumerate()
                .filter(|(_, row)| row.iter().zip(&bits).fold(0u8, |a, (r, b)| a ^ (r & b)) == 1)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(extract_syndrome(&bits, &l), dense);
        }
    }
}

#[test]
fn node_counts_follow_enumeration() {
    let count = |d: i64| -> (usize, usize) {
        let n = 2 * d;
        let mut faces = 0;
        let mut edges = 0;
        for t in 0..=n {
            for y in 0..n {
                for x in 0..n {
                    let odd = [x, y, t].iter().filter(|v| *v % 2 == 1).count();
                    if odd == 2 && !(t % 2 == 0 && (t == 0 || t == n)) {
                        faces += 1;
                    }
                    if odd == 1 {
                        edges += 1;
                    }
                }
            }
        }
        (faces, edges)
    };
    for d in [3usize, 5, 7] {
        let l = RhgLattice::new(d, Boundary::PeriodicTransverse).unwrap();
        assert_eq!((l.faces().len(), l.edges().len()), count(d as i64));
    }
    let r = RhgLattice::new(5, Boundary::PeriodicTransverse).unwrap().faces().len() as f64
        / RhgLattice::new(3, Boundary::PeriodicTransverse).unwrap().faces().len() as f64;
    assert_eq!(r, 350.0 / 72.0);
}
