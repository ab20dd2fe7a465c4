//! Arithmetic expressions over named variables, parsed by `meval` and
//! evaluated against a fixed, thread-safe function table.

use std::fmt;

use meval::{ContextProvider, FuncEvalError};

use crate::error::CliError;

/// Spacetime coordinate names, in chart order.
pub const COORDINATES: [&str; 4] = ["t", "x", "y", "z"];

/// Parameter names for surface embeddings.
pub const PARAMETERS: [&str; 3] = ["u", "v", "w"];

#[derive(Clone)]
pub struct Expression {
    source: String,
    expr: meval::Expr,
    vars: Vec<String>,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.source)
    }
}

struct Scope<'a> {
    names: &'a [String],
    values: &'a [f64],
}

impl ContextProvider for Scope<'_> {
    fn get_var(&self, name: &str) -> Option<f64> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Some(self.values[i]);
        }
        match name {
            "pi" => Some(std::f64::consts::PI),
            "e" => Some(std::f64::consts::E),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> Result<f64, FuncEvalError> {
        let f: fn(f64) -> f64 = match name {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "tan" => f64::tan,
            "sqrt" => f64::sqrt,
            "exp" => f64::exp,
            "ln" => f64::ln,
            "abs" => f64::abs,
            "sinh" => f64::sinh,
            "cosh" => f64::cosh,
            "tanh" => f64::tanh,
            _ => return Err(FuncEvalError::UnknownFunction),
        };
        match args {
            [x] => Ok(f(*x)),
            _ => Err(FuncEvalError::NumberArgs(1)),
        }
    }
}

impl Expression {
    /// Parses `source` and checks that it only uses `vars`, the constants
    /// and the supported functions.
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self, CliError> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| CliError::Config(format!("cannot parse expression {source:?}: {e}")))?;
        let compiled = Expression {
            source: source.to_string(),
            expr,
            vars: vars.iter().map(|s| s.to_string()).collect(),
        };
        let probe = vec![0.25; vars.len()];
        compiled
            .expr
            .eval_with_context(compiled.scope(&probe))
            .map_err(|e| CliError::Config(format!("expression {source:?}: {e}")))?;
        Ok(compiled)
    }

    fn scope<'a>(&'a self, values: &'a [f64]) -> Scope<'a> {
        Scope {
            names: &self.vars,
            values,
        }
    }

    /// Value at `values` (in the order of the declared variables); NaN if
    /// evaluation fails.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.expr.eval_with_context(self.scope(values)).unwrap_or(f64::NAN)
    }
}

/// Parses one expression per component over the first `dim` coordinates.
pub fn parse_components(sources: &[String], dim: usize, vars: &[&str]) -> Result<Vec<Expression>, CliError> {
    if sources.len() != dim {
        return Err(CliError::Config(format!(
            "expected {dim} component expressions, got {}",
            sources.len()
        )));
    }
    sources.iter().map(|s| Expression::parse(s, vars)).collect()
}
