//! Affine maps with additive Gaussian noise, `v ↦ M v + ξ` with
//! `ξ ~ N(mean, cov)`, compared up to an absolute tolerance.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::{check_endpoints, reassemble, Assignment, Capabilities, Conditionals, Markov, Morphism};
use crate::varspace::{VarList, VarName};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct GaussMap {
    dom: VarList,
    cod: VarList,
    pub m: DMatrix<f64>,
    pub cov: DMatrix<f64>,
    pub mean: DVector<f64>,
}

impl Morphism for GaussMap {
    fn dom(&self) -> &VarList {
        &self.dom
    }
    fn cod(&self) -> &VarList {
        &self.cod
    }
}

impl fmt::Debug for GaussMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} M={:?} cov={:?} mean={:?}", self.dom, self.cod, self.m.as_slice(), self.cov.as_slice(), self.mean.as_slice())
    }
}

#[derive(Clone, Debug)]
pub struct Gauss {
    theta: Assignment<usize>,
    tolerance: f64,
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Moore–Penrose inverse; singular values below `eps` are treated as zero.
pub fn pinv(a: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    a.clone().pseudo_inverse(eps).unwrap_or_else(|_| DMatrix::zeros(a.ncols(), a.nrows()))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

impl Gauss {
    pub fn new(theta: Assignment<usize>) -> Self {
        Gauss { theta, tolerance: DEFAULT_TOLERANCE }
    }

    /// Every variable is one-dimensional.
    pub fn scalar() -> Self {
        Gauss::new(Assignment::uniform(1))
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn theta(&self) -> &Assignment<usize> {
        &self.theta
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn dim(&self, l: &VarList) -> Result<usize> {
        l.iter().map(|v| self.theta.get(v).copied()).sum()
    }

    fn offsets(&self, l: &VarList) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::with_capacity(l.len());
        let mut at = 0;
        for v in l.iter() {
            let d = *self.theta.get(v)?;
            out.push((at, d));
            at += d;
        }
        Ok(out)
    }

    pub fn var_dim(&self, v: &VarName) -> Result<usize> {
        self.theta.get(v).copied()
    }

    /// Validates shapes, symmetry and positive semidefiniteness.
    pub fn map(&self, dom: &VarList, cod: &VarList, m: DMatrix<f64>, cov: DMatrix<f64>, mean: DVector<f64>) -> Result<GaussMap> {
        let (n, k) = (self.dim(dom)?, self.dim(cod)?);
        if m.shape() != (k, n) || cov.shape() != (k, k) || mean.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "expected M {k}x{n}, cov {k}x{k}, mean {k}; got M {:?}, cov {:?}, mean {}",
                m.shape(),
                cov.shape(),
                mean.len()
            )));
        }
        if max_abs_diff(&cov, &cov.transpose()) > self.tolerance {
            return Err(Error::InvalidValue("covariance is not symmetric".into()));
        }
        if k > 0 {
            let eig = symmetrize(&cov).symmetric_eigenvalues();
            if eig.iter().any(|&e| e < -self.tolerance) {
                return Err(Error::InvalidValue("covariance is not positive semidefinite".into()));
            }
        }
        Ok(GaussMap { dom: dom.clone(), cod: cod.clone(), m, cov, mean })
    }

    /// A state `[] → cod` with the given covariance and mean.
    pub fn state(&self, cod: &VarList, cov: DMatrix<f64>, mean: DVector<f64>) -> Result<GaussMap> {
        let k = self.dim(cod)?;
        self.map(&VarList::empty(), cod, DMatrix::zeros(k, 0), cov, mean)
    }

    fn linear(&self, dom: &VarList, cod: &VarList, m: DMatrix<f64>) -> Result<GaussMap> {
        let k = self.dim(cod)?;
        Ok(GaussMap { dom: dom.clone(), cod: cod.clone(), m, cov: DMatrix::zeros(k, k), mean: DVector::zeros(k) })
    }

    /// The regression of `Y` on `X` for `f : A → X ++ Y`, as a map `X → Y`
    /// that ignores `A`; fails when the outputs depend on `A` beyond `X`.
    pub fn conditional_regression(&self, f: &GaussMap, split: usize) -> Result<(GaussMap, GaussMap)> {
        let (marg, cond) = self.conditional(f, split)?;
        let na = self.dim(&f.dom)?;
        let nx = marg.m.nrows();
        let a_part = cond.m.columns(0, na).into_owned();
        let x = marg.cod.clone();
        let reduced = GaussMap {
            dom: x.clone(),
            cod: cond.cod.clone(),
            m: cond.m.columns(na, nx).into_owned(),
            cov: cond.cov.clone(),
            mean: cond.mean.clone(),
        };
        let rebuilt = self.compose(&marg, &self.compose(&self.copy(&x)?, &self.tensor(&self.identity(&x)?, &reduced)?)?)?;
        if !self.equal(&rebuilt, f) {
            return Err(if a_part.iter().any(|v| v.abs() > self.tolerance) { Error::ReassemblyFailed } else { Error::SingularBlock });
        }
        Ok((marg, reduced))
    }

    /// Rows of `f` selected by output block.
    pub fn select(&self, f: &GaussMap, vars: &VarList) -> Result<GaussMap> {
        self.compose(f, &self.project(&f.cod, vars)?)
    }
}

impl Markov for Gauss {
    type Mor = GaussMap;

    fn name(&self) -> &'static str {
        "gauss"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_conditionals: true, del_cancellative: true, equality_exact: false, tolerance: self.tolerance }
    }

    fn identity(&self, o: &VarList) -> Result<GaussMap> {
        let n = self.dim(o)?;
        self.linear(o, o, DMatrix::identity(n, n))
    }

    fn compose(&self, f: &GaussMap, g: &GaussMap) -> Result<GaussMap> {
        check_endpoints(&f.cod, &g.dom)?;
        if g.m.ncols() != f.m.nrows() {
            return Err(Error::DimensionMismatch(format!("{} outputs into {} inputs", f.m.nrows(), g.m.ncols())));
        }
        let m = &g.m * &f.m;
        let mean = &g.m * &f.mean + &g.mean;
        let cov = symmetrize(&(&g.m * &f.cov * g.m.transpose() + &g.cov));
        Ok(GaussMap { dom: f.dom.clone(), cod: g.cod.clone(), m, cov, mean })
    }

    fn tensor(&self, f: &GaussMap, g: &GaussMap) -> Result<GaussMap> {
        let (fr, fc) = f.m.shape();
        let (gr, gc) = g.m.shape();
        let mut m = DMatrix::zeros(fr + gr, fc + gc);
        m.view_mut((0, 0), (fr, fc)).copy_from(&f.m);
        m.view_mut((fr, fc), (gr, gc)).copy_from(&g.m);
        let mut cov = DMatrix::zeros(fr + gr, fr + gr);
        cov.view_mut((0, 0), (fr, fr)).copy_from(&f.cov);
        cov.view_mut((fr, fr), (gr, gr)).copy_from(&g.cov);
        let mut mean = DVector::zeros(fr + gr);
        mean.rows_mut(0, fr).copy_from(&f.mean);
        mean.rows_mut(fr, gr).copy_from(&g.mean);
        Ok(GaussMap { dom: f.dom.concat(&g.dom), cod: f.cod.concat(&g.cod), m, cov, mean })
    }

    fn copy(&self, o: &VarList) -> Result<GaussMap> {
        let picks: Vec<usize> = (0..o.len()).chain(0..o.len()).collect();
        self.structural(o, &picks)
    }

    fn del(&self, o: &VarList) -> Result<GaussMap> {
        self.structural(o, &[])
    }

    fn swap(&self, a: &VarList, b: &VarList) -> Result<GaussMap> {
        let n = a.len();
        let picks: Vec<usize> = (n..n + b.len()).chain(0..n).collect();
        self.structural(&a.concat(b), &picks)
    }

    fn equal(&self, f: &GaussMap, g: &GaussMap) -> bool {
        f.dom == g.dom
            && f.cod == g.cod
            && f.m.shape() == g.m.shape()
            && f.cov.shape() == g.cov.shape()
            && f.mean.len() == g.mean.len()
            && max_abs_diff(&f.m, &g.m) <= self.tolerance
            && max_abs_diff(&f.cov, &g.cov) <= self.tolerance
            && f.mean.iter().zip(g.mean.iter()).all(|(a, b)| (a - b).abs() <= self.tolerance)
    }

    fn structural(&self, src: &VarList, picks: &[usize]) -> Result<GaussMap> {
        if let Some(&p) = picks.iter().find(|&&p| p >= src.len()) {
            return Err(Error::InvalidKernel(format!("pick {p} out of range")));
        }
        let offs = self.offsets(src)?;
        let cod: VarList = picks.iter().map(|&p| src[p].clone()).collect();
        let n = self.dim(src)?;
        let k = self.dim(&cod)?;
        let mut m = DMatrix::zeros(k, n);
        let mut row = 0;
        for &p in picks {
            let (at, d) = offs[p];
            for i in 0..d {
                m[(row + i, at + i)] = 1.0;
            }
            row += d;
        }
        self.linear(src, &cod, m)
    }
}

impl Conditionals for Gauss {
    fn conditional(&self, f: &GaussMap, split: usize) -> Result<(GaussMap, GaussMap)> {
        if split > f.cod.len() {
            return Err(Error::DimensionMismatch(format!("split {split} beyond codomain {}", f.cod)));
        }
        let x = VarList::new(f.cod[..split].to_vec());
        let y = VarList::new(f.cod[split..].to_vec());
        let nx = self.dim(&x)?;
        let ny = self.dim(&y)?;
        let na = f.m.ncols();
        let mx = f.m.rows(0, nx).into_owned();
        let my = f.m.rows(nx, ny).into_owned();
        let sxx = f.cov.view((0, 0), (nx, nx)).into_owned();
        let syx = f.cov.view((nx, 0), (ny, nx)).into_owned();
        let syy = f.cov.view((nx, nx), (ny, ny)).into_owned();
        let mux = f.mean.rows(0, nx).into_owned();
        let muy = f.mean.rows(nx, ny).into_owned();
        let gain = &syx * pinv(&sxx, self.tolerance * 1e-3);
        let marginal = GaussMap { dom: f.dom.clone(), cod: x.clone(), m: mx.clone(), cov: sxx, mean: mux.clone() };
        let mut m = DMatrix::zeros(ny, na + nx);
        m.view_mut((0, 0), (ny, na)).copy_from(&(&my - &gain * &mx));
        m.view_mut((0, na), (ny, nx)).copy_from(&gain);
        let cov = symmetrize(&(&syy - &gain * syx.transpose()));
        let cond = GaussMap { dom: f.dom.concat(&x), cod: y, m, cov, mean: muy - &gain * mux };
        if !self.equal(&reassemble(self, &marginal, &cond)?, f) {
            return Err(Error::SingularBlock);
        }
        Ok((marginal, cond))
    }

    fn point(&self, o: &VarList) -> Result<GaussMap> {
        let k = self.dim(o)?;
        self.linear(&VarList::empty(), o, DMatrix::zeros(k, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::laws;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn scalar_composition_law() {
        let g = Gauss::scalar();
        let a = VarList::of(&["a"]);
        let b = VarList::of(&["b"]);
        let c = VarList::of(&["c"]);
        let f1 = g.map(&a, &b, mat(1, 1, &[2.0]), mat(1, 1, &[0.5]), DVector::from_vec(vec![1.0])).unwrap();
        let f2 = g.map(&b, &c, mat(1, 1, &[-3.0]), mat(1, 1, &[0.25]), DVector::from_vec(vec![4.0])).unwrap();
        let h = g.compose(&f1, &f2).unwrap();
        assert!((h.m[(0, 0)] - (-6.0)).abs() < 1e-12);
        assert!((h.cov[(0, 0)] - (9.0 * 0.5 + 0.25)).abs() < 1e-12);
        assert!((h.mean[0] - (-3.0 * 1.0 + 4.0)).abs() < 1e-12);
        assert!(g.equal(&g.compose(&g.identity(&a).unwrap(), &f1).unwrap(), &f1));
    }

    #[test]
    fn covariance_example_assembles() {
        let g = Gauss::scalar();
        let w = VarList::of(&["w"]);
        let sw = g.state(&w, mat(1, 1, &[1.0]), DVector::zeros(1)).unwrap();
        let noisy = |v: &str| g.map(&w, &VarList::of(&[v]), mat(1, 1, &[1.0]), mat(1, 1, &[1.0]), DVector::zeros(1)).unwrap();
        let fan = g.compose(&g.copy(&w).unwrap(), &g.tensor(&g.copy(&w).unwrap(), &g.identity(&w).unwrap()).unwrap()).unwrap();
        let body = g.tensor(&g.tensor(&g.identity(&w).unwrap(), &noisy("x")).unwrap(), &noisy("y")).unwrap();
        let s = g.compose_all(&[&sw, &fan, &body]).unwrap();
        let expected = mat(3, 3, &[1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]);
        assert!(max_abs_diff(&s.cov, &expected) < 1e-9);
        assert!(s.mean.iter().all(|v| v.abs() < 1e-9));
        // conditioning on w gives x|w and y|w each N(w, 1), independent
        let (marg, cond) = g.conditional(&s, 1).unwrap();
        assert!((marg.cov[(0, 0)] - 1.0).abs() < 1e-9);
        assert!(max_abs_diff(&cond.m, &mat(2, 1, &[1.0, 1.0])) < 1e-9);
        assert!(max_abs_diff(&cond.cov, &DMatrix::identity(2, 2)) < 1e-9);
    }

    #[test]
    fn regression_example() {
        let g = Gauss::scalar();
        let s = g.state(&VarList::of(&["a", "b"]), mat(2, 2, &[1.0, 1.0, 1.0, 2.0]), DVector::zeros(2)).unwrap();
        let (_, cond) = g.conditional_regression(&s, 1).unwrap();
        assert!((cond.m[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((cond.cov[(0, 0)] - 1.0).abs() < 1e-12);
        let ind = g.state(&VarList::of(&["a", "b"]), mat(2, 2, &[2.0, 0.0, 0.0, 3.0]), DVector::zeros(2)).unwrap();
        let (_, cond) = g.conditional_regression(&ind, 1).unwrap();
        assert!(cond.m[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn structure_maps() {
        let g = Gauss::scalar();
        let x = VarList::of(&["x"]);
        let c = g.copy(&x).unwrap();
        assert_eq!(c.m, mat(2, 1, &[1.0, 1.0]));
        assert_eq!(c.cov, DMatrix::zeros(2, 2));
        let proj = g.compose(&c, &g.tensor(&g.identity(&x).unwrap(), &g.del(&x).unwrap()).unwrap()).unwrap();
        assert!(g.equal(&proj, &g.identity(&x).unwrap()));
        let n1 = g.state(&VarList::of(&["a"]), mat(1, 1, &[1.0]), DVector::zeros(1)).unwrap();
        let n2 = g.state(&VarList::of(&["b"]), mat(1, 1, &[1.0]), DVector::zeros(1)).unwrap();
        let t = g.tensor(&n1, &n2).unwrap();
        assert_eq!(t.cov, DMatrix::identity(2, 2));
        let f = g.map(&x, &VarList::of(&["y"]), mat(1, 1, &[3.0]), mat(1, 1, &[2.0]), DVector::from_vec(vec![1.0])).unwrap();
        assert!(laws::del_natural(&g, &f).unwrap());
    }

    #[test]
    fn equality_tolerance() {
        let g = Gauss::scalar();
        let a = VarList::of(&["a"]);
        let s1 = g.state(&a, mat(1, 1, &[1.0]), DVector::zeros(1)).unwrap();
        let s2 = g.state(&a, mat(1, 1, &[1.0 + 1e-12]), DVector::zeros(1)).unwrap();
        let s3 = g.state(&a, mat(1, 1, &[1.0 + 1e-6]), DVector::zeros(1)).unwrap();
        assert!(g.equal(&s1, &s2));
        assert!(!g.equal(&s1, &s3));
    }

    #[test]
    fn axioms_with_mixed_dimensions() {
        let g = Gauss::new(Assignment::uniform(1).with(VarName::new("b").unwrap(), 2));
        let ab = VarList::of(&["a", "b"]);
        let c = VarList::of(&["c"]);
        for o in [&ab, &c, &VarList::empty()] {
            assert!(laws::coassociative(&g, o).unwrap());
            assert!(laws::counital(&g, o).unwrap());
            assert!(laws::cocommutative(&g, o).unwrap());
        }
        assert!(laws::tensor_compatible(&g, &ab, &c).unwrap());
        assert!(laws::structural_agrees(&g, &ab.concat(&c), &[2, 1, 1, 0]).unwrap());
        assert!(laws::swap_involutive(&g, &ab, &c).unwrap());
    }

    #[test]
    fn rejects_bad_covariance() {
        let g = Gauss::scalar();
        let a = VarList::of(&["a"]);
        assert!(g.state(&a, mat(1, 1, &[-1.0]), DVector::zeros(1)).is_err());
        assert!(matches!(g.state(&a, mat(2, 2, &[1.0, 0.0, 0.0, 1.0]), DVector::zeros(2)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn degenerate_conditionals() {
        let g = Gauss::scalar();
        // b = a exactly: singular joint covariance
        let s = g.state(&VarList::of(&["a", "b"]), mat(2, 2, &[1.0, 1.0, 1.0, 1.0]), DVector::zeros(2)).unwrap();
        assert!(laws::conditional_reassembles(&g, &s, 1).unwrap());
        // a deterministic zero variable conditions trivially
        let z = g.state(&VarList::of(&["a", "b"]), mat(2, 2, &[0.0, 0.0, 0.0, 2.0]), DVector::zeros(2)).unwrap();
        assert!(laws::conditional_reassembles(&g, &z, 1).unwrap());
    }
}
