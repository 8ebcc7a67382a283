//! Run configuration read from a single JSON document.
//!
//! Expressions are strings in the `robin_heat::expr` language. Real-valued
//! fields accept either a JSON number or a constant expression such as
//! `"-2*exp(1)"`. Every error names the JSON path of the offending field.

use std::fmt;
use std::path::PathBuf;

use serde_json::{Map, Value};
use thiserror::Error;

use robin_heat::expr::{Bindings, Expr, Var};
use robin_heat::problem::{
    AsymptoticLimits, BoundaryData, CoefficientField, GrowthBounds, ProblemSpec,
    ScalarNonlinearity, DEFAULT_DELTA,
};
use robin_heat::stepping::{Method, StepperConfig, StepperKind};

pub const DEFAULT_PERTURBATION: &str = "0.1*sin(3.141592653589793*x)";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    /// JSON path such as `.problem.mu`; `.` is the document root.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: &Path, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

/// JSON path under construction.
#[derive(Debug, Clone, Default)]
pub struct Path(Vec<String>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn key(&self, k: &str) -> Self {
        let mut p = self.0.clone();
        p.push(k.to_string());
        Path(p)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(".");
        }
        for k in &self.0 {
            write!(f, ".{k}")?;
        }
        Ok(())
    }
}

struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: Path,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: Path) -> Result<Self, ConfigError> {
        match v {
            Value::Object(map) => Ok(Obj { map, path }),
            _ => Err(ConfigError::new(&path, "expected an object")),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn required(&self, key: &str) -> Result<&'a Value, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError::new(&self.path.key(key), "missing required field"))
    }

    fn object(&self, key: &str) -> Result<Obj<'a>, ConfigError> {
        Obj::new(self.required(key)?, self.path.key(key))
    }

    fn optional_object(&self, key: &str) -> Result<Option<Obj<'a>>, ConfigError> {
        self.get(key).map(|v| Obj::new(v, self.path.key(key))).transpose()
    }

    fn expr(&self, key: &str, vars: &[Var]) -> Result<Expr, ConfigError> {
        parse_expr(self.required(key)?, &self.path.key(key), vars)
    }

    fn optional_expr(&self, key: &str, vars: &[Var]) -> Result<Option<Expr>, ConfigError> {
        self.get(key)
            .map(|v| parse_expr(v, &self.path.key(key), vars))
            .transpose()
    }

    fn real(&self, key: &str) -> Result<f64, ConfigError> {
        real(self.required(key)?, &self.path.key(key))
    }

    fn optional_real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| real(v, &self.path.key(key))).transpose()
    }

    fn string(&self, key: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(ConfigError::new(&self.path.key(key), "expected a string")),
        }
    }
}

fn parse_expr(v: &Value, path: &Path, vars: &[Var]) -> Result<Expr, ConfigError> {
    match v {
        Value::String(s) => Expr::parse(s, vars).map_err(|e| ConfigError::new(path, e.to_string())),
        Value::Number(n) => Ok(Expr::constant(n.as_f64().unwrap_or(f64::NAN))),
        _ => Err(ConfigError::new(path, "expected an expression string")),
    }
}

fn real(v: &Value, path: &Path) -> Result<f64, ConfigError> {
    let x = match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ConfigError::new(path, "number out of range"))?,
        Value::String(s) => Expr::parse(s, &[])
            .map_err(|e| ConfigError::new(path, e.to_string()))?
            .eval(&Bindings::new())
            .map_err(|e| ConfigError::new(path, e.to_string()))?,
        _ => return Err(ConfigError::new(path, "expected a number or a constant expression")),
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::new(path, format!("must be finite, got {x}")))
    }
}

/// Output destinations named in the config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub limits: Option<AsymptoticLimits>,
    pub method: Method,
    pub nx: usize,
    pub stepper: StepperConfig,
    /// Exact solution over `(x, t)`.
    pub exact: Option<Expr>,
    /// Added to `u0` by the contraction check.
    pub perturbation: Expr,
    pub decay_window: Option<(f64, f64)>,
    /// Optional cap on the worst max-node error for the `error` check.
    pub error_tol: Option<f64>,
    pub output: OutputPaths,
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<String>,
    pub nx: Option<u64>,
    pub dt: Option<f64>,
    pub tmax: Option<f64>,
    pub stepper: Option<String>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Writes the overrides into the raw document before it is parsed.
    pub fn apply(&self, doc: &mut Value) -> Result<(), ConfigError> {
        let root = doc
            .as_object_mut()
            .ok_or_else(|| ConfigError::new(&Path::root(), "expected an object"))?;
        if let Some(m) = &self.method {
            root.insert("method".into(), Value::from(m.as_str()));
        }
        if let Some(n) = self.nx {
            root.insert("nx".into(), Value::from(n));
        }
        if let Some(dt) = self.dt {
            root.insert("dt".into(), Value::from(dt));
        }
        if let Some(s) = &self.stepper {
            root.insert("stepper".into(), Value::from(s.as_str()));
        }
        if let Some(t) = self.tmax {
            let problem = root
                .get_mut("problem")
                .and_then(Value::as_object_mut)
                .ok_or_else(|| ConfigError::new(&Path::root().key("problem"), "missing required field"))?;
            problem.insert("T".into(), Value::from(t));
        }
        if let Some(out) = &self.out {
            let output = root
                .entry("output")
                .or_insert_with(|| Value::Object(Map::new()));
            if let Some(o) = output.as_object_mut() {
                o.insert("csv".into(), Value::from(out.to_string_lossy().into_owned()));
            }
        }
        Ok(())
    }
}

fn parse_method(s: &str, path: &Path) -> Result<Method, ConfigError> {
    match s {
        "fdm" => Ok(Method::Fdm),
        "galerkin" => Ok(Method::Galerkin),
        other => Err(ConfigError::new(path, format!("unknown method `{other}`, expected fdm or galerkin"))),
    }
}

fn parse_stepper(s: &str, path: &Path) -> Result<StepperKind, ConfigError> {
    match s {
        "eigen" => Ok(StepperKind::Eigen),
        "be" | "backward_euler" => Ok(StepperKind::BackwardEuler),
        other => Err(ConfigError::new(path, format!("unknown stepper `{other}`, expected eigen or be"))),
    }
}

fn parse_growth(obj: &Obj) -> Result<GrowthBounds, ConfigError> {
    let g = GrowthBounds {
        c1: obj.real("c1")?,
        c1_prime: obj.real("c1_prime")?,
        c2: obj.real("c2")?,
        p: obj.real("p")?,
        delta: obj.optional_real("delta")?.unwrap_or(DEFAULT_DELTA),
    };
    g.validate().map_err(|e| ConfigError::new(&obj.path, e.to_string()))?;
    Ok(g)
}

fn parse_problem(obj: &Obj) -> Result<ProblemSpec, ConfigError> {
    let p = &obj.path;
    let horizon = obj.real("T")?;
    if !(horizon > 0.0) {
        return Err(ConfigError::new(&p.key("T"), format!("must be positive, got {horizon}")));
    }
    let xt = [Var::X, Var::T];
    let mu = CoefficientField::new(obj.expr("mu", &xt)?, obj.optional_real("mu0")?, horizon)
        .map_err(|e| ConfigError::new(&p.key("mu"), e.to_string()))?;
    let growth = parse_growth(&obj.object("growth")?)?;
    let f = ScalarNonlinearity::new(obj.expr("f", &[Var::U])?, growth)
        .map_err(|e| ConfigError::new(&p.key("f"), e.to_string()))?;
    let f1 = obj.expr("f1", &xt)?;
    for &x in &robin_heat::sampling::x_lattice() {
        f1.eval(&Bindings::xt(x, 0.0))
            .map_err(|e| ConfigError::new(&p.key("f1"), format!("at x = {x}, t = 0: {e}")))?;
    }
    let (h0, h1) = (obj.real("h0")?, obj.real("h1")?);
    let boundary = BoundaryData::new(h0, h1, obj.expr("g0", &[Var::T])?, obj.expr("g1", &[Var::T])?)
        .map_err(|e| ConfigError::new(&p.key(if h0 < 0.0 { "h0" } else { "h1" }), e.to_string()))?;
    for (key, g) in [("g0", &boundary.g0), ("g1", &boundary.g1)] {
        g.eval(&Bindings::new().t(0.0))
            .map_err(|e| ConfigError::new(&p.key(key), format!("at t = 0: {e}")))?;
    }
    let u0 = obj.expr("u0", &[Var::X])?;
    ProblemSpec::new(mu, f, f1, boundary, u0, horizon).map_err(|e| ConfigError::new(&p.key("u0"), e.to_string()))
}

fn parse_limits(obj: &Obj) -> Result<AsymptoticLimits, ConfigError> {
    AsymptoticLimits::new(
        obj.expr("mu_inf", &[Var::X])?,
        obj.expr("f1_inf", &[Var::X])?,
        obj.real("g0_inf")?,
        obj.real("g1_inf")?,
        obj.real("gamma1")?,
        obj.real("c_exp")?,
    )
    .map_err(|e| ConfigError::new(&obj.path, e.to_string()))
}

impl RunConfig {
    pub fn from_value(doc: &Value) -> Result<RunConfig, ConfigError> {
        let root = Obj::new(doc, Path::root())?;
        let problem = parse_problem(&root.object("problem")?)?;
        let limits = root.optional_object("asymptotic")?.map(|o| parse_limits(&o)).transpose()?;

        let method = match root.string("method")? {
            Some(s) => parse_method(s, &root.path.key("method"))?,
            None => Method::Fdm,
        };
        let stepper = match root.string("stepper")? {
            Some(s) => parse_stepper(s, &root.path.key("stepper"))?,
            None => StepperKind::Eigen,
        };
        let nx_path = root.path.key("nx");
        let nx = root
            .required("nx")?
            .as_u64()
            .ok_or_else(|| ConfigError::new(&nx_path, "expected a positive integer"))?;
        if nx < 3 {
            return Err(ConfigError::new(&nx_path, format!("must be at least 3, got {nx}")));
        }
        let dt = root.real("dt")?;
        if !(dt > 0.0 && dt <= problem.horizon) {
            return Err(ConfigError::new(
                &root.path.key("dt"),
                format!("must satisfy 0 < dt <= T = {}, got {dt}", problem.horizon),
            ));
        }
        let mut stepper = StepperConfig::new(dt, stepper)
            .map_err(|e| ConfigError::new(&root.path.key("dt"), e.to_string()))?;
        if let Some(tol) = root.optional_real("inner_tol")? {
            stepper.inner_tol = tol;
        }
        if let Some(v) = root.get("inner_max") {
            stepper.inner_max = v
                .as_u64()
                .ok_or_else(|| ConfigError::new(&root.path.key("inner_max"), "expected a positive integer"))?
                as usize;
        }
        stepper
            .validate()
            .map_err(|e| ConfigError::new(&root.path, e.to_string()))?;

        let exact = root.optional_expr("exact", &[Var::X, Var::T])?;
        let perturbation = match root.optional_expr("perturbation", &[Var::X])? {
            Some(e) => e,
            None => Expr::parse(DEFAULT_PERTURBATION, &[Var::X]).expect("valid default"),
        };
        let decay_window = match root.get("decay_window") {
            None => None,
            Some(v) => {
                let path = root.path.key("decay_window");
                let pair = v
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| ConfigError::new(&path, "expected [from, to]"))?;
                let (a, b) = (real(&pair[0], &path)?, real(&pair[1], &path)?);
                if !(a < b) {
                    return Err(ConfigError::new(&path, format!("empty window [{a}, {b}]")));
                }
                Some((a, b))
            }
        };
        let error_tol = root.optional_real("error_tol")?;
        let output = match root.optional_object("output")? {
            None => OutputPaths::default(),
            Some(o) => OutputPaths {
                csv: o.string("csv")?.map(PathBuf::from),
                report: o.string("report")?.map(PathBuf::from),
            },
        };
        Ok(RunConfig {
            problem,
            limits,
            method,
            nx: nx as usize,
            stepper,
            exact,
            perturbation,
            decay_window,
            error_tol,
            output,
        })
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
        let mut doc: Value = serde_json::from_str(text)
            .map_err(|e| ConfigError::new(&Path::root(), format!("invalid JSON: {e}")))?;
        overrides.apply(&mut doc)?;
        RunConfig::from_value(&doc)
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt
    }

    pub fn horizon(&self) -> f64 {
        self.problem.horizon
    }
}
