//! Scalar fields given on the command line, e.g. `--f "0.1*cos(pi*x)*y^2"`.
//!
//! Expressions use evalexpr syntax with the variables `x`, `y` and the
//! constants `pi`, `e`. Common math functions are available under their
//! short names (`sin`, `exp`, `sqrt`, ...).

use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use evalexpr::error::EvalexprResultValue;
use evalexpr::{build_operator_tree, Context, DefaultNumericTypes, EvalexprError, EvalexprResult, Node, Value};

type V = Value<DefaultNumericTypes>;

struct PointContext {
    x: V,
    y: V,
}

static PI: V = Value::Float(std::f64::consts::PI);
static E: V = Value::Float(std::f64::consts::E);

fn unary(name: &str) -> Option<fn(f64) -> f64> {
    Some(match name {
        "sin" => f64::sin,
        "cos" => f64::cos,
        "tan" => f64::tan,
        "asin" => f64::asin,
        "acos" => f64::acos,
        "atan" => f64::atan,
        "sinh" => f64::sinh,
        "cosh" => f64::cosh,
        "tanh" => f64::tanh,
        "exp" => f64::exp,
        "ln" => f64::ln,
        "log10" => f64::log10,
        "sqrt" => f64::sqrt,
        "abs" => f64::abs,
        _ => return None,
    })
}

fn binary(name: &str) -> Option<fn(f64, f64) -> f64> {
    Some(match name {
        "pow" => f64::powf,
        "atan2" => f64::atan2,
        "hypot" => f64::hypot,
        _ => return None,
    })
}

impl Context for PointContext {
    type NumericTypes = DefaultNumericTypes;

    fn get_value(&self, identifier: &str) -> Option<&V> {
        match identifier {
            "x" => Some(&self.x),
            "y" => Some(&self.y),
            "pi" => Some(&PI),
            "e" => Some(&E),
            _ => None,
        }
    }

    fn call_function(&self, identifier: &str, argument: &V) -> EvalexprResultValue<DefaultNumericTypes> {
        if let Some(f) = unary(identifier) {
            return Ok(Value::Float(f(argument.as_number()?)));
        }
        if let Some(f) = binary(identifier) {
            let args = argument.as_tuple()?;
            if args.len() != 2 {
                return Err(EvalexprError::wrong_function_argument_amount(args.len(), 2));
            }
            return Ok(Value::Float(f(args[0].as_number()?, args[1].as_number()?)));
        }
        Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string()))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<(), DefaultNumericTypes> {
        Err(EvalexprError::BuiltinFunctionsCannotBeDisabled)
    }
}

/// A parsed expression in `x` and `y`.
#[derive(Clone)]
pub struct Expr {
    source: String,
    tree: Arc<Node<DefaultNumericTypes>>,
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(source).with_context(|| format!("cannot parse expression `{source}`"))?;
        let expr = Self { source: source.to_string(), tree: Arc::new(tree) };
        // Catch unknown names and type errors before they surface mid-run.
        if let Err(err) = expr.try_eval(0.123, -0.456) {
            bail!("cannot evaluate `{source}`: {err}");
        }
        Ok(expr)
    }

    fn try_eval(&self, x: f64, y: f64) -> EvalexprResult<f64, DefaultNumericTypes> {
        let ctx = PointContext { x: Value::Float(x), y: Value::Float(y) };
        self.tree.eval_number_with_context(&ctx)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.try_eval(x, y).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_fields() {
        let e = Expr::parse("0.1*cos(pi*x) + y^2 - pow(x, 3)").unwrap();
        let (x, y) = (0.3, -0.7);
        let want = 0.1 * (std::f64::consts::PI * x).cos() + y * y - x.powi(3);
        assert!((e.eval(x, y) - want).abs() < 1e-14);
        assert_eq!(Expr::parse("2").unwrap().eval(5.0, 5.0), 2.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x +* y").is_err());
        assert!(Expr::parse("z + 1").is_err());
        assert!(Expr::parse("frobnicate(x)").is_err());
    }
}
