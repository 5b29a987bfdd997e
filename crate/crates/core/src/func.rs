use std::fmt;
use std::sync::Arc;

/// A named scalar function of the state, shareable across threads.
#[derive(Clone)]
pub struct ScalarFn {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    constant: Option<f64>,
}

impl ScalarFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            constant: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            label: format!("{c}"),
            f: Arc::new(move |_| c),
            constant: Some(c),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The value, if this function was built with [`ScalarFn::constant`].
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.eval(x)).collect()
    }

    /// `self - c`, keeping the label readable.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.f.clone();
        Self {
            label: format!("({}) - {c}", self.label),
            f: Arc::new(move |x| inner(x) - c),
            constant: self.constant.map(|v| v - c),
        }
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ScalarFn").field(&self.label).finish()
    }
}
