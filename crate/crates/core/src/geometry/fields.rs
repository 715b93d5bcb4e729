use nalgebra::{Cholesky, DMatrix, DVector};

use super::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;

/// Symmetric `(0,2)` field stored as its upper triangle of expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct SymField {
    chart: Chart,
    entries: Vec<ScalarExpr>,
}

/// Values and first partials of a symmetric field at one point.
#[derive(Debug, Clone)]
pub struct SymJet {
    pub value: DMatrix<f64>,
    /// `partials[k]` is the componentwise derivative along coordinate `k`.
    pub partials: Vec<DMatrix<f64>>,
}

fn packed(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymField {
    /// `entries` lists the upper triangle row by row: `(0,0), (0,1), ...`.
    pub fn from_packed(chart: &Chart, entries: Vec<ScalarExpr>) -> Result<Self> {
        let n = chart.dim();
        if entries.len() != n * (n + 1) / 2 {
            return Err(Error::Dimension(format!(
                "expected {} packed entries, got {}",
                n * (n + 1) / 2,
                entries.len()
            )));
        }
        if entries.iter().any(|e| e.vars() != chart.coord_names()) {
            return Err(Error::Dimension("entry parsed against a different chart".into()));
        }
        Ok(Self {
            chart: chart.clone(),
            entries,
        })
    }

    /// Parses `(i, j, text)` triples; missing components are zero.
    pub fn parse(chart: &Chart, components: &[(usize, usize, &str)]) -> Result<Self> {
        let n = chart.dim();
        let names = chart.coord_names();
        let mut entries = vec![ScalarExpr::constant(0.0, names); n * (n + 1) / 2];
        for &(i, j, text) in components {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!("component ({i},{j}) out of range")));
            }
            entries[packed(n, i, j)] = ScalarExpr::parse(text, names)?;
        }
        Self::from_packed(chart, entries)
    }

    pub fn diagonal(chart: &Chart, diag: Vec<ScalarExpr>) -> Result<Self> {
        let n = chart.dim();
        if diag.len() != n {
            return Err(Error::Dimension(format!("expected {n} diagonal entries")));
        }
        let zero = ScalarExpr::constant(0.0, chart.coord_names());
        let mut entries = vec![zero; n * (n + 1) / 2];
        for (i, d) in diag.into_iter().enumerate() {
            entries[packed(n, i, i)] = d;
        }
        Self::from_packed(chart, entries)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.entries[packed(self.dim(), i, j)]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, e: ScalarExpr) -> Result<()> {
        if e.vars() != self.chart.coord_names() {
            return Err(Error::Dimension("entry parsed against a different chart".into()));
        }
        let n = self.dim();
        self.entries[packed(n, i, j)] = e;
        Ok(())
    }

    pub fn packed_entries(&self) -> &[ScalarExpr] {
        &self.entries
    }

    pub fn values(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.entry(i, j).eval(p)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    pub fn jet(&self, p: &[f64]) -> Result<SymJet> {
        let n = self.dim();
        let mut value = DMatrix::zeros(n, n);
        let mut partials = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                let e = self.entry(i, j);
                if e.is_constant() {
                    let v = e.eval(p)?;
                    value[(i, j)] = v;
                    value[(j, i)] = v;
                    continue;
                }
                let jet = e.eval_jet2(p)?;
                value[(i, j)] = jet.value;
                value[(j, i)] = jet.value;
                for (k, d) in partials.iter_mut().enumerate() {
                    d[(i, j)] = jet.grad[k];
                    d[(j, i)] = jet.grad[k];
                }
            }
        }
        Ok(SymJet { value, partials })
    }
}

/// Riemannian metric `g_ij` on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField(SymField);

/// Metric data at one point, after a successful Cholesky factorization.
#[derive(Debug, Clone)]
pub struct MetricAt {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub cholesky: Cholesky<f64, nalgebra::Dyn>,
}

impl MetricAt {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * self.g[(i, j)] * v[j];
            }
        }
        s
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Index lowering `v -> g v`.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        (&self.g * DVector::from_column_slice(v)).as_slice().to_vec()
    }

    /// Index raising of a covector.
    pub fn raise(&self, w: &[f64]) -> Vec<f64> {
        (&self.g_inv * DVector::from_column_slice(w)).as_slice().to_vec()
    }
}

impl MetricField {
    pub fn new(field: SymField) -> Self {
        Self(field)
    }

    pub fn parse(chart: &Chart, components: &[(usize, usize, &str)]) -> Result<Self> {
        SymField::parse(chart, components).map(Self)
    }

    pub fn diagonal(chart: &Chart, diag: Vec<ScalarExpr>) -> Result<Self> {
        SymField::diagonal(chart, diag).map(Self)
    }

    /// `sum dx_i^2` on `chart`.
    pub fn euclidean(chart: &Chart) -> Self {
        let one = ScalarExpr::constant(1.0, chart.coord_names());
        Self::diagonal(chart, vec![one; chart.dim()]).expect("diagonal of matching size")
    }

    pub fn field(&self) -> &SymField {
        &self.0
    }

    pub fn chart(&self) -> &Chart {
        self.0.chart()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn values(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.0.values(p)
    }

    /// Metric, inverse and first partials at `p`; fails with
    /// [`Error::DegenerateMetric`] when `g(p)` is not positive definite.
    pub fn at(&self, p: &[f64]) -> Result<MetricAt> {
        let SymJet { value, partials } = self.0.jet(p)?;
        let cholesky = Cholesky::new(value.clone()).ok_or_else(|| Error::DegenerateMetric(p.to_vec()))?;
        let g_inv = cholesky.inverse();
        Ok(MetricAt {
            g: value,
            g_inv,
            dg: partials,
            cholesky,
        })
    }

    /// Value-only SPD check.
    pub fn is_positive_definite(&self, p: &[f64]) -> Result<bool> {
        Ok(Cholesky::new(self.values(p)?).is_some())
    }
}

/// Symmetric `(0,2)` tensor field, the candidate Codazzi tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField(SymField);

impl SymTensorField {
    pub fn new(field: SymField) -> Self {
        Self(field)
    }

    pub fn parse(chart: &Chart, components: &[(usize, usize, &str)]) -> Result<Self> {
        SymField::parse(chart, components).map(Self)
    }

    pub fn diagonal(chart: &Chart, diag: Vec<ScalarExpr>) -> Result<Self> {
        SymField::diagonal(chart, diag).map(Self)
    }

    /// The metric itself viewed as a `(0,2)` tensor.
    pub fn from_metric(g: &MetricField) -> Self {
        Self(g.0.clone())
    }

    pub fn field(&self) -> &SymField {
        &self.0
    }

    pub fn field_mut(&mut self) -> &mut SymField {
        &mut self.0
    }

    pub fn chart(&self) -> &Chart {
        self.0.chart()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn values(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.0.values(p)
    }

    pub fn jet(&self, p: &[f64]) -> Result<SymJet> {
        self.0.jet(p)
    }

    /// Mixed `(1,1)` form `g^{ik} A_kj` at `p`.
    pub fn mixed(&self, g: &MetricAt, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(&g.g_inv * self.values(p)?)
    }
}

/// Vector field with expression components `V^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Chart,
    components: Vec<ScalarExpr>,
}

impl VectorField {
    pub fn new(chart: &Chart, components: Vec<ScalarExpr>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "vector field needs {} components",
                chart.dim()
            )));
        }
        if components.iter().any(|e| e.vars() != chart.coord_names()) {
            return Err(Error::Dimension("component parsed against a different chart".into()));
        }
        Ok(Self {
            chart: chart.clone(),
            components,
        })
    }

    pub fn parse(chart: &Chart, components: &[&str]) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| ScalarExpr::parse(c, chart.coord_names()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(chart, comps)
    }

    /// The coordinate field `d/dx_axis`.
    pub fn coordinate(chart: &Chart, axis: usize) -> Self {
        let names = chart.coord_names();
        let comps = (0..chart.dim())
            .map(|k| ScalarExpr::constant(if k == axis { 1.0 } else { 0.0 }, names))
            .collect();
        Self::new(chart, comps).expect("components match chart")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(p)).collect()
    }

    /// Components and the Jacobian `J[k][m] = d_m V^k`.
    pub fn jacobian(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut vals = Vec::with_capacity(self.components.len());
        let mut jac = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let j = c.eval_jet2(p)?;
            vals.push(j.value);
            jac.push(j.grad);
        }
        Ok((vals, jac))
    }
}

/// A coordinate change `phi: source -> target` with components written in
/// the source chart's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMap {
    source: Chart,
    components: Vec<ScalarExpr>,
}

impl CoordinateMap {
    pub fn new(source: &Chart, components: Vec<ScalarExpr>) -> Result<Self> {
        if components.iter().any(|e| e.vars() != source.coord_names()) {
            return Err(Error::Dimension("component parsed against a different chart".into()));
        }
        Ok(Self {
            source: source.clone(),
            components,
        })
    }

    pub fn parse(source: &Chart, components: &[&str]) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| ScalarExpr::parse(c, source.coord_names()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(source, comps)
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    /// Image point and Jacobian `J[i][a] = d phi^i / d u^a`.
    pub fn apply(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let m = self.components.len();
        let n = self.source.dim();
        let mut image = Vec::with_capacity(m);
        let mut jac = DMatrix::zeros(m, n);
        for (i, c) in self.components.iter().enumerate() {
            let j = c.eval_jet2(p)?;
            image.push(j.value);
            for a in 0..n {
                jac[(i, a)] = j.grad[a];
            }
        }
        Ok((image, jac))
    }
}
