//! JSON and text renderings of check reports.

use convexint_core::{CheckReport, Extended, Rational, Vector, Witness};
use serde_json::{json, Value};

fn q(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn vec_json(v: &Vector) -> Value {
    Value::Array(v.iter().map(q).collect())
}

fn ext(e: &Extended) -> Value {
    Value::String(e.to_string())
}

pub fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Certificate {
            target,
            eps1,
            eps2,
            ell,
            selections,
            normal,
        } => json!({
            "type": "certificate",
            "target": vec_json(target),
            "eps1": q(eps1),
            "eps2": q(eps2),
            "ell": ell.iter().map(q).collect::<Vec<_>>(),
            "selections": selections.iter().map(vec_json).collect::<Vec<_>>(),
            "normal": vec_json(normal),
        }),
        Witness::Sample { point, gap } => json!({
            "type": "sample",
            "point": vec_json(point),
            "gap": q(gap),
        }),
        Witness::Ray { direction } => json!({"type": "ray", "direction": vec_json(direction)}),
        Witness::SetEquality { left, right } => json!({"type": "set_equality", "left": left, "right": right}),
        Witness::ValueMatch { point, value } => json!({
            "type": "value_match",
            "point": vec_json(point),
            "value": ext(value),
        }),
        Witness::Step {
            index,
            eps,
            lambda,
            residual_integral,
            displacement,
            normal,
        } => json!({
            "type": "step",
            "index": index,
            "eps": q(eps),
            "lambda": q(lambda),
            "residual_integral": q(residual_integral),
            "displacement": q(displacement),
            "normal": vec_json(normal),
        }),
        Witness::Differentiability {
            point,
            differentiable,
            gradient,
        } => json!({
            "type": "differentiability",
            "point": vec_json(point),
            "differentiable": differentiable,
            "gradient": gradient.as_ref().map(vec_json),
        }),
    }
}

pub fn report_json(r: &CheckReport) -> Value {
    let counterexample = r.counterexample.as_ref().map(|c| {
        json!({
            "description": c.description,
            "point": c.point.as_ref().map(vec_json),
            "eps": c.eps.as_ref().map(q),
        })
    });
    json!({
        "theorem": r.check,
        "status": r.status.as_str(),
        "witnesses": r.witnesses.iter().map(witness_json).collect::<Vec<_>>(),
        "counterexample": counterexample,
        "notes": r.notes,
    })
}

pub fn report_text(r: &CheckReport) -> String {
    let n = r.witnesses.len();
    let mut out = format!("{}: {} ({n} witness{})", r.check, r.status.as_str(), if n == 1 { "" } else { "es" });
    if let Some(c) = &r.counterexample {
        out.push_str(&format!("\n  counterexample: {}", c.description));
        if let Some(p) = &c.point {
            out.push_str(&format!(" at {p}"));
        }
        if let Some(e) = &c.eps {
            out.push_str(&format!(" (eps = {e})"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use convexint_core::q as rat;

    #[test]
    fn renders_failures_with_counterexample() {
        let mut r = CheckReport::new("sum_rule");
        r.witnesses.push(Witness::Sample {
            point: Vector::from_ints(&[1]),
            gap: rat(1, 2),
        });
        r.fail("broken".into(), Some(Vector::from_ints(&[2])), Some(rat(1, 4)));
        let v = report_json(&r);
        assert_eq!(v["status"], "fail");
        assert_eq!(v["witnesses"][0]["gap"], "1/2");
        assert_eq!(v["counterexample"]["point"][0], "2");
        assert!(report_text(&r).contains("eps = 1/4"));
    }
}
