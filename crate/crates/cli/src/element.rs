//! Element specs: graded core elements written as TOML.
//!
//! ```toml
//! level = 1
//!
//! [[component]]
//! level = 0
//! scalar = [{ c = 1.0 }, { c = -2.0, pow = [2] }]
//!
//! [[component]]
//! level = 1
//! f = [[{ c = 1.0 }], [{ c = 1.0 }]]
//! g = [[{ c = 1.0 }], [{ c = 0.5, ci = 0.5 }]]
//! ```
//!
//! A polynomial is a list of terms `c + i ci` times `x^pow`. A level-0 component is a scalar
//! polynomial. A level-`r` component is the rank-one operator `theta_{f,g}` of two fields with
//! `N^r` component polynomials each; both must satisfy the identifications at level `r`.
//! Components sharing a level are summed.

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;

use selfsim::bimodule::{closed_form_defect, POINTWISE_TOLERANCE};
use selfsim::core_rep::{GradedCoreElement, OpExpr};
use selfsim::field::{Polynomial, ScalarFn, VectorFn};
use selfsim::singularity::Singularity;
use selfsim::SelfSimilarSystem;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Spec {
    level: Option<usize>,
    #[serde(default)]
    component: Vec<Component>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Component {
    level: usize,
    scalar: Option<Vec<Term>>,
    f: Option<Vec<Vec<Term>>>,
    g: Option<Vec<Vec<Term>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    c: f64,
    #[serde(default)]
    ci: f64,
    pow: Option<Vec<u32>>,
}

fn polynomial(terms: &[Term], dim: usize) -> Result<ScalarFn> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let pow = t.pow.clone().unwrap_or_else(|| vec![0; dim]);
        ensure!(pow.len() == dim, "term exponents {pow:?} do not match dimension {dim}");
        ensure!(t.c.is_finite() && t.ci.is_finite(), "non-finite coefficient");
        out.push((Complex64::new(t.c, t.ci), pow));
    }
    if out.is_empty() {
        out.push((Complex64::new(0.0, 0.0), vec![0; dim]));
    }
    Ok(ScalarFn::Poly(Polynomial::new(out)))
}

fn field(system: &SelfSimilarSystem, sing: &Singularity, level: usize, comps: &[Vec<Term>], which: &str) -> Result<VectorFn> {
    let n = system.n_branches().pow(level as u32);
    ensure!(comps.len() == n, "field `{which}` at level {level} needs {n} components, found {}", comps.len());
    let comps = comps.iter().map(|t| polynomial(t, system.dimension())).collect::<Result<Vec<_>>>()?;
    let f = VectorFn::components(level, comps);
    let data = sing.level_data(system, level)?;
    let defect = closed_form_defect(system, &f, &data);
    if defect > POINTWISE_TOLERANCE.max(1e-9) {
        bail!("field `{which}` at level {level} violates the identifications (defect {defect:e})");
    }
    Ok(f)
}

/// Parses an element spec against a system.
pub fn parse(text: &str, system: &SelfSimilarSystem, sing: &Singularity) -> Result<GradedCoreElement> {
    let spec: Spec = toml::from_str(text).context("malformed element spec")?;
    ensure!(!spec.component.is_empty(), "element spec has no components");
    let top = spec.component.iter().map(|c| c.level).max().unwrap_or(0);
    let level = spec.level.unwrap_or(top);
    ensure!(top <= level, "component level {top} exceeds element level {level}");
    let mut by_level: Vec<Vec<OpExpr>> = vec![Vec::new(); level + 1];
    for c in &spec.component {
        let expr = match (c.level, &c.scalar, &c.f, &c.g) {
            (0, Some(terms), None, None) => OpExpr::Scalar(polynomial(terms, system.dimension())?),
            (0, _, _, _) => bail!("a level-0 component takes exactly one `scalar` polynomial"),
            (r, None, Some(f), Some(g)) => OpExpr::rank_one(field(system, sing, r, f, "f")?, field(system, sing, r, g, "g")?)?,
            (r, _, _, _) => bail!("the level-{r} component needs fields `f` and `g` and no `scalar`"),
        };
        by_level[c.level].push(expr);
    }
    let components = by_level
        .into_iter()
        .map(|mut v| match v.len() {
            0 => None,
            1 => v.pop(),
            _ => Some(OpExpr::Sum(v)),
        })
        .collect();
    Ok(GradedCoreElement::new(level, components)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfsim::ifs::tent;

    #[test]
    fn unit_and_rank_one() {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        let e = parse("[[component]]\nlevel = 0\nscalar = [{ c = 1.0 }]\n", &t, &s).unwrap();
        assert_eq!(e.level(), 0);
        let text = "level = 2\n[[component]]\nlevel = 1\nf = [[{ c = 1.0 }], [{ c = 1.0 }]]\ng = [[{ c = 2.0 }], [{ c = 2.0 }]]\n";
        assert_eq!(parse(text, &t, &s).unwrap().level(), 2);
    }

    #[test]
    fn rejects_non_members() {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        // f_1(1) = 1 but f_2(1) = 0 at the branch value 1
        let text = "[[component]]\nlevel = 1\nf = [[{ c = 1.0 }], [{ c = 0.0 }]]\ng = [[{ c = 1.0 }], [{ c = 1.0 }]]\n";
        assert!(parse(text, &t, &s).is_err());
        assert!(parse("[[component]]\nlevel = 0\n", &t, &s).is_err());
        assert!(parse("nonsense = [", &t, &s).is_err());
    }
}
