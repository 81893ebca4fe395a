//! Host graph, normalized and scaled Laplacians, Chebyshev basis, and the
//! K-localized graph convolution `y = Σ_k T_k(L̃) x θ_k`.
//!
//! The basis runs over `T_0 … T_{K-1}`, so a convolution of order `K`
//! mixes information from at most `K - 1` hops away. `K = 2` therefore
//! reaches direct neighbours only.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, OperatorStack};

/// Chebyshev order used when none is configured.
pub const DEFAULT_CHEB_ORDER: usize = 2;

/// Graphs up to this size get an exact eigendecomposition for `λ_max`.
pub const DENSE_EIGEN_LIMIT: usize = 512;

const SYMMETRY_TOL: f64 = 1e-9;

/// Undirected, unweighted host graph with its cached spectral operators.
#[derive(Clone, Debug)]
pub struct HostGraph {
    node_ids: Vec<String>,
    adjacency: Matrix,
    laplacian: Matrix,
    lambda_max: f64,
    scaled_laplacian: Matrix,
    cheb_basis: Vec<Matrix>,
}

impl HostGraph {
    /// Builds the graph from host-name edges. Self-loops are ignored and
    /// repeated edges collapse.
    pub fn build<S: AsRef<str>>(edges: &[(S, S)], node_ids: &[S], order: usize) -> Result<Self> {
        let ids: Vec<String> = node_ids.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.as_str(), i).is_some() {
                return Err(Error::DuplicateHost(id.clone()));
            }
        }
        let lookup = |h: &str| {
            index
                .get(h)
                .copied()
                .ok_or_else(|| Error::UnknownHost(h.to_string()))
        };
        let mut pairs = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            pairs.push((lookup(a.as_ref())?, lookup(b.as_ref())?));
        }
        Self::from_index_edges(ids, &pairs, order)
    }

    /// Builds the graph from index pairs into `node_ids`.
    pub fn from_index_edges(
        node_ids: Vec<String>,
        edges: &[(usize, usize)],
        order: usize,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("Chebyshev order K must be at least 1"));
        }
        let n = node_ids.len();
        let mut seen = BTreeSet::new();
        for id in &node_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateHost(id.clone()));
            }
        }
        let mut adjacency = Matrix::zeros(n, n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownHost(format!("#{}", a.max(b))));
            }
            if a != b {
                adjacency.set(a, b, 1.0);
                adjacency.set(b, a, 1.0);
            }
        }
        let laplacian = normalized_laplacian(&adjacency);
        let lambda_max = lambda_max(&laplacian)?;
        let scaled_laplacian = scaled_laplacian(&laplacian, lambda_max);
        let cheb_basis = chebyshev_basis(&scaled_laplacian, order);
        Ok(HostGraph {
            node_ids,
            adjacency,
            laplacian,
            lambda_max,
            scaled_laplacian,
            cheb_basis,
        })
    }

    /// Same graph with a basis of a different order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("Chebyshev order K must be at least 1"));
        }
        let mut g = self.clone();
        g.cheb_basis = chebyshev_basis(&self.scaled_laplacian, order);
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// Chebyshev order `K` (number of basis matrices).
    pub fn order(&self) -> usize {
        self.cheb_basis.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &Matrix {
        &self.laplacian
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn scaled_laplacian(&self) -> &Matrix {
        &self.scaled_laplacian
    }

    pub fn cheb_basis(&self) -> &[Matrix] {
        &self.cheb_basis
    }

    pub fn operator_stack(&self) -> Arc<OperatorStack> {
        Arc::new(
            OperatorStack::new(self.cheb_basis.clone())
                .expect("Chebyshev basis matrices share one square shape"),
        )
    }

    /// Undirected edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency.get(i, j) != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Hop distance from `from` to every node; `None` when unreachable.
    pub fn hop_distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for (v, &a) in self.adjacency.row(u).iter().enumerate() {
                if a != 0.0 && dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Free-function form of [`HostGraph::build`].
pub fn build_host_graph<S: AsRef<str>>(
    edges: &[(S, S)],
    node_ids: &[S],
    order: usize,
) -> Result<HostGraph> {
    HostGraph::build(edges, node_ids, order)
}

/// `L = I − D^(−1/2) A D^(−1/2)`; degree-0 nodes get a zero `D^(−1/2)` entry.
pub fn normalized_laplacian(adjacency: &Matrix) -> Matrix {
    let n = adjacency.rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = adjacency.row(i).iter().sum();
            if deg > 0.0 {
                1.0 / deg.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Matrix::from_fn(n, n, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        eye - inv_sqrt[i] * adjacency.get(i, j) * inv_sqrt[j]
    })
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(laplacian: &Matrix) -> Result<f64> {
    check_symmetric(laplacian)?;
    if laplacian.rows() == 0 {
        return Err(Error::invalid("lambda_max of an empty matrix"));
    }
    if laplacian.rows() <= DENSE_EIGEN_LIMIT {
        let (values, _) = symmetric_eigen(laplacian);
        Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
    } else {
        lambda_max_power(laplacian, 1.0, 1e-12, 100_000)
    }
}

/// Power iteration on `M + shift·I`, returning the top eigenvalue of `M`.
///
/// The shift must make the wanted eigenvalue dominant in magnitude; `1.0`
/// does so for normalized Laplacians, whose spectrum lies in `[0, 2]`.
pub fn lambda_max_power(m: &Matrix, shift: f64, tol: f64, max_iter: usize) -> Result<f64> {
    check_symmetric(m)?;
    let n = m.rows();
    if n == 0 {
        return Err(Error::invalid("lambda_max of an empty matrix"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut estimate = f64::NAN;
    for _ in 0..max_iter {
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate() {
            let row = m.row(i);
            *wi = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + shift * v[i];
        }
        let rayleigh: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        if normalize(&mut w) == 0.0 {
            return Ok(-shift);
        }
        v = w;
        if (rayleigh - estimate).abs() <= tol * rayleigh.abs().max(1.0) {
            return Ok(rayleigh - shift);
        }
        estimate = rayleigh;
    }
    Ok(estimate - shift)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::Shape {
            op: "symmetric matrix",
            left: m.shape(),
            right: (m.cols(), m.rows()),
        });
    }
    let asymmetry = m.asymmetry();
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// `L̃ = 2L/λ_max − I`.
pub fn scaled_laplacian(laplacian: &Matrix, lambda_max: f64) -> Matrix {
    let n = laplacian.rows();
    Matrix::from_fn(n, n, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        2.0 * laplacian.get(i, j) / lambda_max - eye
    })
}

/// `[T_0(L̃), …, T_{K−1}(L̃)]` by `T_k = 2 L̃ T_{k−1} − T_{k−2}`.
pub fn chebyshev_basis(scaled: &Matrix, order: usize) -> Vec<Matrix> {
    let n = scaled.rows();
    let mut basis = Vec::with_capacity(order);
    basis.push(Matrix::identity(n));
    if order > 1 {
        basis.push(scaled.clone());
    }
    for k in 2..order {
        let next = scaled
            .matmul(&basis[k - 1])
            .expect("square operands")
            .scale(2.0)
            .sub(&basis[k - 2])
            .expect("same shape");
        basis.push(next);
    }
    basis
}

/// `y = Σ_k T_k x θ_k` for `x: n × d_in` and `θ_k: d_in × d_out`.
pub fn graph_conv(basis: &[Matrix], x: &Matrix, theta: &[Matrix]) -> Result<Matrix> {
    if basis.len() != theta.len() || basis.is_empty() {
        return Err(Error::invalid(format!(
            "graph_conv: basis has order {} but {} weight matrices were given",
            basis.len(),
            theta.len()
        )));
    }
    let d_out = theta[0].cols();
    let mut y = Matrix::zeros(x.rows(), d_out);
    for (t, w) in basis.iter().zip(theta) {
        let term = t.matmul(x)?.matmul(w)?;
        y = y.add(&term)?;
    }
    Ok(y)
}

/// Eigenvalues and column eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.rows();
    let dm = DMatrix::from_row_slice(n, n, m.data());
    let eig = SymmetricEigen::new(dm);
    let values = eig.eigenvalues.iter().copied().collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)]);
    (values, vectors)
}

/// Exact spectral-domain filtering, used to validate [`graph_conv`].
pub mod spectral {
    use super::*;

    /// Largest graph the dense oracle accepts.
    pub const ORACLE_CAP: usize = 64;

    /// `y = U g(Λ̃) Uᵀ x` with `g(λ) = Σ_k θ_k T_k(λ)`, `Λ̃ = 2Λ/λ_max − I`.
    ///
    /// Works from the eigendecomposition of `L` and evaluates the scalar
    /// polynomials in closed form, so it shares no code path with the
    /// matrix recursion.
    pub fn spectral_conv_oracle(laplacian: &Matrix, x: &Matrix, theta: &[f64]) -> Result<Matrix> {
        let n = laplacian.rows();
        if n > ORACLE_CAP {
            return Err(Error::OracleTooLarge { n, cap: ORACLE_CAP });
        }
        check_symmetric(laplacian)?;
        if x.rows() != n {
            return Err(Error::Shape {
                op: "spectral_conv_oracle",
                left: laplacian.shape(),
                right: x.shape(),
            });
        }
        let (values, u) = symmetric_eigen(laplacian);
        let lmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gains: Vec<f64> = values
            .iter()
            .map(|&lam| {
                let scaled = (2.0 * lam / lmax - 1.0).clamp(-1.0, 1.0);
                let angle = scaled.acos();
                theta
                    .iter()
                    .enumerate()
                    .map(|(k, th)| th * (k as f64 * angle).cos())
                    .sum()
            })
            .collect();
        let x_hat = u.transpose().matmul(x)?;
        let filtered = Matrix::from_fn(n, x.cols(), |i, j| gains[i] * x_hat.get(i, j));
        u.matmul(&filtered)
    }
}

/// Reads an edge list CSV with header `src,dst`.
pub fn read_edge_list(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["src", "dst"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `src,dst`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 || record[0].is_empty() || record[1].is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "expected two non-empty fields".into(),
            });
        }
        let (a, b) = (record[0].to_string(), record[1].to_string());
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        if seen.insert(key) {
            edges.push((a, b));
        }
    }
    Ok(edges)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::spectral::spectral_conv_oracle;
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("h{i}")).collect()
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, order: usize) -> HostGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        HostGraph::from_index_edges(ids(n), &edges, order).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Cyclic Jacobi eigenvalue sweep; independent of nalgebra.
    fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
        let n = m.rows();
        let mut a = m.clone();
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a.get(p, q).powi(2);
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        (0..n).map(|i| a.get(i, i)).collect()
    }

    #[test]
    fn two_node_graph_by_hand() {
        let g = HostGraph::build(&[("a", "b")], &["a", "b"], 2).unwrap();
        assert_eq!(g.adjacency(), &Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]));
        assert_eq!(g.laplacian(), &Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]));
        assert!((g.lambda_max() - 2.0).abs() < 1e-12);
        let expected = Matrix::from_rows(&[[0.0, -1.0], [-1.0, 0.0]]);
        assert!(g.scaled_laplacian().max_abs_diff(&expected).unwrap() < 1e-12);
        assert_eq!(g.cheb_basis()[0], Matrix::identity(2));
        assert_eq!(&g.cheb_basis()[1], g.scaled_laplacian());
    }

    #[test]
    fn single_isolated_node() {
        let g = HostGraph::build::<&str>(&[], &["solo"], 1).unwrap();
        assert_eq!(g.laplacian(), &Matrix::from_rows(&[[1.0]]));
        assert_eq!(g.cheb_basis(), &[Matrix::from_rows(&[[1.0]])]);
        assert!((g.lambda_max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn third_basis_matrix_is_two_l_squared_minus_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_graph(&mut rng, 9, 0.35, 3);
        let lt = g.scaled_laplacian();
        let expected = lt
            .matmul(lt)
            .unwrap()
            .scale(2.0)
            .sub(&Matrix::identity(9))
            .unwrap();
        assert!(g.cheb_basis()[2].max_abs_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn self_loops_ignored_and_duplicates_collapse() {
        let g = HostGraph::build(&[("a", "a"), ("a", "b"), ("b", "a")], &["a", "b", "c"], 2)
            .unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert_eq!(g.adjacency().get(0, 0), 0.0);
    }

    #[test]
    fn duplicate_and_unknown_hosts_are_fatal() {
        let err = HostGraph::build::<&str>(&[], &["a", "a"], 2).unwrap_err();
        assert!(matches!(err, Error::DuplicateHost(ref h) if h == "a"));
        let err = HostGraph::build(&[("a", "zz")], &["a", "b"], 2).unwrap_err();
        assert!(matches!(err, Error::UnknownHost(ref h) if h == "zz"));
        assert!(HostGraph::build::<&str>(&[], &["a"], 0).is_err());
    }

    #[test]
    fn laplacian_spectra_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=12 {
            let g = random_graph(&mut rng, n, 0.4, 4);
            assert!(g.laplacian().is_symmetric(0.0));
            let (vals, _) = symmetric_eigen(g.laplacian());
            assert!(vals.iter().all(|&v| (-1e-9..=2.0 + 1e-9).contains(&v)), "{vals:?}");
            let (svals, _) = symmetric_eigen(g.scaled_laplacian());
            assert!(svals.iter().all(|&v| (-1.0 - 1e-9..=1.0 + 1e-9).contains(&v)));
            for t in g.cheb_basis() {
                let (tv, _) = symmetric_eigen(t);
                let radius = tv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(radius <= 1.0 + 1e-9, "radius {radius}");
            }
        }
    }

    #[test]
    fn lambda_max_cases() {
        let p2 = normalized_laplacian(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]));
        assert!((lambda_max(&p2).unwrap() - 2.0).abs() < 1e-12);
        assert!((lambda_max(&Matrix::identity(5)).unwrap() - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 8, 8);
            let sym = a.add(&a.transpose()).unwrap().scale(0.5);
            let oracle = jacobi_eigenvalues(&sym)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((lambda_max(&sym).unwrap() - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn power_iteration_agrees_with_dense_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [3, 10, 40] {
            let g = random_graph(&mut rng, n, 0.2, 2);
            let dense = lambda_max(g.laplacian()).unwrap();
            let power = lambda_max_power(g.laplacian(), 1.0, 1e-14, 200_000).unwrap();
            assert!((dense - power).abs() < 1e-8, "n={n}: {dense} vs {power}");
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]);
        assert!(matches!(lambda_max(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn order_one_identity_theta_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_graph(&mut rng, 6, 0.5, 1);
        let x = random_matrix(&mut rng, 6, 3);
        let y = graph_conv(g.cheb_basis(), &x, &[Matrix::identity(3)]).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn edgeless_graph_is_shared_per_node_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = HostGraph::from_index_edges(ids(5), &[], 3).unwrap();
        // No edges: L = I, λ_max = 1, so L̃ = I and every T_k is I.
        assert_eq!(g.scaled_laplacian(), &Matrix::identity(5));
        let x = random_matrix(&mut rng, 5, 2);
        let theta: Vec<Matrix> = (0..3).map(|_| random_matrix(&mut rng, 2, 4)).collect();
        let y = graph_conv(g.cheb_basis(), &x, &theta).unwrap();
        let summed = theta[0].add(&theta[1]).unwrap().add(&theta[2]).unwrap();
        let expected = x.matmul(&summed).unwrap();
        assert!(y.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn order_mismatch_is_fatal() {
        let g = HostGraph::from_index_edges(ids(3), &[(0, 1)], 2).unwrap();
        let x = Matrix::zeros(3, 2);
        assert!(graph_conv(g.cheb_basis(), &x, &[Matrix::identity(2)]).is_err());
    }

    #[test]
    fn oracle_trivial_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_graph(&mut rng, 7, 0.4, 2);
        let x = random_matrix(&mut rng, 7, 3);
        let y = spectral_conv_oracle(g.laplacian(), &x, &[1.0]).unwrap();
        assert!(y.max_abs_diff(&x).unwrap() < 1e-12);
        let y1 = spectral_conv_oracle(g.laplacian(), &x, &[0.0, 1.0]).unwrap();
        let lx = g.scaled_laplacian().matmul(&x).unwrap();
        assert!(y1.max_abs_diff(&lx).unwrap() < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_graphs() {
        let big = Matrix::identity(spectral::ORACLE_CAP + 1);
        let x = Matrix::zeros(spectral::ORACLE_CAP + 1, 1);
        assert!(matches!(
            spectral_conv_oracle(&big, &x, &[1.0]),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn recursion_matches_oracle_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            let n = rng.gen_range(1..=12);
            let k = rng.gen_range(1..=5);
            let p = rng.gen_range(0.1..0.7);
            let g = random_graph(&mut rng, n, p, k);
            let x = random_matrix(&mut rng, n, 3);
            let coeffs: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let theta: Vec<Matrix> = coeffs.iter().map(|&c| Matrix::identity(3).scale(c)).collect();
            let y = graph_conv(g.cheb_basis(), &x, &theta).unwrap();
            let oracle = spectral_conv_oracle(g.laplacian(), &x, &coeffs).unwrap();
            assert!(y.max_abs_diff(&oracle).unwrap() < 1e-8);
        }
    }

    #[test]
    fn edge_list_file_round() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.csv");
        std::fs::write(&path, "src,dst\na,b\nb,a\nb,c\n").unwrap();
        let edges = read_edge_list(&path).unwrap();
        assert_eq!(edges, vec![("a".into(), "b".into()), ("b".into(), "c".into())]);

        std::fs::write(&path, "from,to\na,b\n").unwrap();
        assert!(matches!(read_edge_list(&path), Err(Error::Parse { line: 1, .. })));
    }
}
