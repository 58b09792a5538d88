//! Runtime evaluation of transform expressions over a store.

use std::cmp::Ordering;

use crate::diag::Code;
use crate::model::*;

use super::Store;

/// Result of evaluating an expression: a concrete value, or a symbolic one
/// when some operand is only Defined.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Val {
    Known(Literal),
    Symbolic,
}

/// A runtime fault that rejects the call.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Fault {
    pub code: Code,
    pub message: String,
}

impl Fault {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Fault {
            code,
            message: message.into(),
        }
    }
}

pub(crate) fn eval(expr: &Expr, store: &Store) -> Result<Val, Fault> {
    match expr {
        Expr::Lit(l) => Ok(Val::Known(l.clone())),
        Expr::Ref(id) => {
            let cell = store.get(id).cloned().unwrap_or_default();
            if cell.status < Status::Defined {
                return Err(Fault::new(
                    Code::R104,
                    format!("`{id}` is read while {}", cell.status),
                ));
            }
            Ok(match cell.value {
                Some(v) => Val::Known(v),
                None => Val::Symbolic,
            })
        }
        Expr::Neg(e) => match eval(e, store)? {
            Val::Symbolic => Ok(Val::Symbolic),
            Val::Known(Literal::Int(i)) => i
                .checked_neg()
                .map(|v| Val::Known(Literal::Int(v)))
                .ok_or_else(|| Fault::new(Code::R107, "integer overflow in negation")),
            Val::Known(Literal::Real(r)) => Ok(Val::Known(Literal::Real(-r))),
            Val::Known(Literal::Str(_)) => Err(Fault::new(Code::R106, "cannot negate a string")),
        },
        Expr::Len(e) => match eval(e, store)? {
            Val::Symbolic => Ok(Val::Symbolic),
            Val::Known(Literal::Str(s)) => Ok(Val::Known(Literal::Int(s.chars().count() as i64))),
            Val::Known(other) => Err(Fault::new(
                Code::R106,
                format!("len() expects a string, got {}", other.kind()),
            )),
        },
        Expr::Binary { op, lhs, rhs } => {
            // Both sides are evaluated so that every under-status read is
            // reported, even when the other side is already symbolic.
            let l = eval(lhs, store)?;
            let r = eval(rhs, store)?;
            match (l, r) {
                (Val::Known(a), Val::Known(b)) => binary(*op, a, b).map(Val::Known),
                _ => Ok(Val::Symbolic),
            }
        }
    }
}

fn binary(op: BinOp, a: Literal, b: Literal) -> Result<Literal, Fault> {
    use Literal::*;
    let overflow = || Fault::new(Code::R107, format!("integer overflow in `{}`", op.symbol()));
    match (op, a, b) {
        (BinOp::Concat, Str(x), Str(y)) => Ok(Str(x + &y)),
        (BinOp::Concat, x, y) => Err(Fault::new(
            Code::R106,
            format!("`++` expects strings, got {} and {}", x.kind(), y.kind()),
        )),
        (_, Int(_), Int(0)) if op == BinOp::Div => Err(Fault::new(Code::R107, "division by zero")),
        (_, Int(x), Int(y)) => {
            let v = match op {
                BinOp::Add => x.checked_add(y),
                BinOp::Sub => x.checked_sub(y),
                BinOp::Mul => x.checked_mul(y),
                BinOp::Div => x.checked_div(y),
                BinOp::Concat => unreachable!(),
            };
            v.map(Int).ok_or_else(overflow)
        }
        (_, x @ (Int(_) | Real(_)), y @ (Int(_) | Real(_))) => {
            let (x, y) = (as_f64(&x), as_f64(&y));
            if op == BinOp::Div && y == 0.0 {
                return Err(Fault::new(Code::R107, "division by zero"));
            }
            let v = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
                BinOp::Concat => unreachable!(),
            };
            if v.is_finite() {
                Ok(Real(v))
            } else {
                Err(Fault::new(
                    Code::R107,
                    format!("real result of `{}` is not finite", op.symbol()),
                ))
            }
        }
        (_, x, y) => Err(Fault::new(
            Code::R106,
            format!(
                "`{}` expects numbers, got {} and {}",
                op.symbol(),
                x.kind(),
                y.kind()
            ),
        )),
    }
}

fn as_f64(l: &Literal) -> f64 {
    match l {
        Literal::Int(i) => *i as f64,
        Literal::Real(r) => *r,
        Literal::Str(_) => f64::NAN,
    }
}

/// Compares two literals: numbers numerically (Int promoted to Real when
/// mixed), strings lexicographically. `None` when the kinds are incomparable.
pub fn compare(a: &Literal, b: &Literal) -> Option<Ordering> {
    match (a, b) {
        (Literal::Int(x), Literal::Int(y)) => Some(x.cmp(y)),
        (Literal::Str(x), Literal::Str(y)) => Some(x.cmp(y)),
        (Literal::Str(_), _) | (_, Literal::Str(_)) => None,
        (x, y) => as_f64(x).partial_cmp(&as_f64(y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(e: &str) -> Result<Val, Fault> {
        let text = format!("func F {{ class category = c group = g level = l states = [] effect e {{ x := {e} }} }}");
        let spec = crate::dsl::parse_spec(&text).unwrap();
        let f = spec.functions().next().unwrap();
        let Statement::Assign { expr, .. } = &f.effects[0].body.statements()[0] else {
            unreachable!()
        };
        eval(expr, &Store::default())
    }

    #[test]
    fn integer_arithmetic_is_checked() {
        assert_eq!(lit("7 / 2").unwrap(), Val::Known(Literal::Int(3)));
        assert_eq!(lit("1 / 0").unwrap_err().code, Code::R107);
        assert_eq!(lit("9223372036854775807 + 1").unwrap_err().code, Code::R107);
        assert_eq!(
            lit("(0 - 9223372036854775807 - 1) / -1").unwrap_err().code,
            Code::R107
        );
    }

    #[test]
    fn mixed_arithmetic_promotes_to_real() {
        assert_eq!(lit("1 + 0.5").unwrap(), Val::Known(Literal::Real(1.5)));
        assert_eq!(lit("1.0 / 0").unwrap_err().code, Code::R107);
        let huge = format!("1{}.0", "0".repeat(308));
        assert_eq!(lit(&format!("{huge} * 10.0")).unwrap_err().code, Code::R107);
    }

    #[test]
    fn strings() {
        assert_eq!(
            lit("len(\"ab\" ++ \"cé\")").unwrap(),
            Val::Known(Literal::Int(4))
        );
        assert_eq!(lit("\"a\" + 1").unwrap_err().code, Code::R106);
    }

    #[test]
    fn unknown_operand_is_a_status_fault() {
        assert_eq!(lit("y + 1").unwrap_err().code, Code::R104);
    }
}
