//! Scalar fields over a box domain: parsed expressions or tabulated samples.

use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ParseError};

/// Axis-aligned box `Π [lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FieldError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(FieldError::Shape("domain bounds must have equal non-zero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(FieldError::Shape("domain needs finite lo < hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo], vec![hi]).expect("invalid interval")
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo, lo], vec![hi, hi]).expect("invalid square")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("non-finite value at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("invalid field shape: {0}")]
    Shape(String),
}

/// Samples on a uniform tensor lattice spanning `[lo, hi]` per axis,
/// endpoints included, evaluated by multilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Table {
    /// `values` are in row-major order (last axis fastest).
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self, FieldError> {
        if lo.len() != hi.len() || lo.len() != shape.len() || shape.is_empty() {
            return Err(FieldError::Shape("bounds and shape disagree".into()));
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(FieldError::Shape("need at least two samples per axis".into()));
        }
        if shape.iter().product::<usize>() != values.len() {
            return Err(FieldError::Shape(format!(
                "{} values for shape {:?}",
                values.len(),
                shape
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::Shape(format!("sample {i} is not finite")));
        }
        Ok(Self { lo, hi, shape, values })
    }

    /// Tabulate `f` on `samples` points per axis of the domain.
    pub fn sample(domain: &DomainSpec, samples: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self, FieldError> {
        let n = domain.dim();
        let shape = vec![samples; n];
        let total = samples.pow(n as u32);
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; n];
        for flat in 0..total {
            let mut rem = flat;
            for k in (0..n).rev() {
                let i = rem % samples;
                rem /= samples;
                x[k] = domain.lo[k] + (domain.hi[k] - domain.lo[k]) * i as f64 / (samples - 1) as f64;
            }
            values.push(f(&x));
        }
        Self::new(domain.lo.clone(), domain.hi.clone(), shape, values)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.shape.len();
        // per-axis lower index and weight
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for k in 0..n {
            let cells = (self.shape[k] - 1) as f64;
            let s = ((x[k] - self.lo[k]) / (self.hi[k] - self.lo[k]) * cells).clamp(0.0, cells);
            let i = (s.floor() as usize).min(self.shape[k] - 2);
            base[k] = i;
            frac[k] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for k in 0..n {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                flat = flat * self.shape[k] + base[k] + bit;
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        acc
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn scaled(&self, c: f64) -> Table {
        Table {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientField {
    Constant(f64),
    Expr { source: String, expr: Expr },
    Tabulated(Table),
}

impl CoefficientField {
    pub fn parse(text: &str, n: usize) -> Result<Self, FieldError> {
        let expr = expr::parse(text, n)?;
        Ok(CoefficientField::Expr {
            source: text.to_string(),
            expr,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, FieldError> {
        let v = match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::Expr { expr, .. } => expr.eval(x).map_err(|source| FieldError::Eval {
                point: x.to_vec(),
                source,
            })?,
            CoefficientField::Tabulated(t) => t.eval(x),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FieldError::NonFinite(x.to_vec()))
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoefficientField::Constant(_))
    }

    pub fn describe(&self) -> String {
        match self {
            CoefficientField::Constant(c) => format!("{c}"),
            CoefficientField::Expr { source, .. } => source.clone(),
            CoefficientField::Tabulated(t) => format!("table{:?}", t.shape),
        }
    }
}

impl From<f64> for CoefficientField {
    fn from(c: f64) -> Self {
        CoefficientField::Constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_linearly() {
        let t = Table::new(vec![0.0], vec![1.0], vec![3], vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(t.eval(&[0.25]), 0.5);
        assert_eq!(t.eval(&[0.75]), 2.5);
        assert_eq!(t.eval(&[2.0]), 4.0);
        assert_eq!(t.eval(&[-1.0]), 0.0);
    }

    #[test]
    fn table_bilinear() {
        let dom = DomainSpec::square(0.0, 1.0);
        let t = Table::sample(&dom, 5, |x| 2.0 * x[0] + 3.0 * x[1]).unwrap();
        assert!((t.eval(&[0.3, 0.7]) - 2.7).abs() < 1e-12);
    }

    #[test]
    fn expression_field_reports_location() {
        let f = CoefficientField::parse("1/x", 1).unwrap();
        match f.eval(&[0.0]) {
            Err(FieldError::Eval { point, .. }) => assert_eq!(point, vec![0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::new(vec![1.0], vec![0.0]).is_err());
        assert!(DomainSpec::new(vec![], vec![]).is_err());
        assert!(DomainSpec::interval(0.0, 1.0).contains(&[0.5]));
    }
}
