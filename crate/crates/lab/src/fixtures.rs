//! Named symbols and input functions with their analytic membership tags.

use std::sync::Arc;

use anyhow::{bail, Result};
use fracmax::grid::sample;
use fracmax::lipschitz::SymbolKind;
use fracmax::{GridFunction, GroupModel, LatticeDomain};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Symbol,
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub role: Role,
    pub tags: Vec<&'static str>,
    /// Whether the symbol uses the scenario's `beta`.
    pub declared_beta: bool,
    pub description: &'static str,
}

struct SymbolDef {
    id: &'static str,
    lipschitz: bool,
    nonnegative: bool,
    declared_beta: bool,
    description: &'static str,
}

const SYMBOLS: &[SymbolDef] = &[
    SymbolDef {
        id: "gauge-beta",
        lipschitz: true,
        nonnegative: true,
        declared_beta: true,
        description: "rho(x)^beta",
    },
    SymbolDef {
        id: "gauge-beta-shifted",
        lipschitz: true,
        nonnegative: true,
        declared_beta: true,
        description: "rho(a^-1 x)^beta with a = (0.25, -0.15, 0...)",
    },
    SymbolDef {
        id: "neg-gauge-beta",
        lipschitz: true,
        nonnegative: false,
        declared_beta: true,
        description: "-rho(x)^beta",
    },
    SymbolDef {
        id: "signed",
        lipschitz: true,
        nonnegative: false,
        declared_beta: false,
        description: "first coordinate x_1",
    },
    SymbolDef {
        id: "constant",
        lipschitz: true,
        nonnegative: true,
        declared_beta: false,
        description: "the constant 1",
    },
    SymbolDef {
        id: "log-spike",
        lipschitz: false,
        nonnegative: true,
        declared_beta: false,
        description: "log(1 + 1/rho(x))",
    },
    SymbolDef {
        id: "jump",
        lipschitz: false,
        nonnegative: true,
        declared_beta: false,
        description: "indicator of {x_1 > 0.1}",
    },
];

const INPUTS: &[(&str, &str)] = &[
    ("bump", "(1 - (rho/0.5)^2)^2 inside the gauge ball of radius 0.5"),
    ("indicator", "indicator of the gauge ball of radius 0.5 about the origin"),
    ("gaussian", "exp(-4 rho(x)^2)"),
    ("one", "the constant 1"),
];

pub fn list_fixtures() -> Vec<CatalogEntry> {
    let mut out: Vec<CatalogEntry> = SYMBOLS
        .iter()
        .map(|s| {
            let mut tags = vec![if s.lipschitz { "lipschitz" } else { "non-lipschitz" }];
            tags.push(if s.nonnegative { "nonnegative" } else { "signed" });
            CatalogEntry { id: s.id, role: Role::Symbol, tags, declared_beta: s.declared_beta, description: s.description }
        })
        .collect();
    out.extend(INPUTS.iter().map(|&(id, description)| CatalogEntry {
        id,
        role: Role::Input,
        tags: vec!["compact"],
        declared_beta: false,
        description,
    }));
    out
}

fn shift_for(model: &GroupModel) -> Vec<f64> {
    let mut s = vec![0.0; model.dim()];
    s[0] = 0.25;
    if s.len() > 1 {
        s[1] = -0.15;
    }
    s
}

/// The analytic symbol behind a catalog id.
pub fn symbol_kind(id: &str, beta: f64, model: &GroupModel) -> Result<SymbolKind> {
    Ok(match id {
        "gauge-beta" => SymbolKind::GaugePower { beta, shift: None },
        "gauge-beta-shifted" => SymbolKind::GaugePower { beta, shift: Some(shift_for(model)) },
        "neg-gauge-beta" => SymbolKind::NegGaugePower { beta },
        "signed" => SymbolKind::Signed { axis: 0 },
        "constant" => SymbolKind::Constant { value: 1.0 },
        "log-spike" => SymbolKind::LogSpike { scale: 1.0 },
        "jump" => SymbolKind::Jump { axis: 0, at: 0.1 },
        other => bail!("unknown symbol fixture {other:?}; see `fracmax fixtures list`"),
    })
}

pub fn is_symbol(id: &str) -> bool {
    SYMBOLS.iter().any(|s| s.id == id)
}

pub fn is_input(id: &str) -> bool {
    INPUTS.iter().any(|(i, _)| *i == id)
}

pub fn bump_profile(r: f64) -> f64 {
    if r < 1.0 {
        let u = 1.0 - r * r;
        u * u
    } else {
        0.0
    }
}

pub fn input_function(id: &str, domain: &Arc<LatticeDomain>) -> Result<GridFunction> {
    let m = domain.model().clone();
    let f = match id {
        "bump" => sample(domain, |x| bump_profile(m.norm_raw(x) / 0.5))?,
        "indicator" => sample(domain, |x| if m.norm_raw(x) < 0.5 { 1.0 } else { 0.0 })?,
        "gaussian" => sample(domain, |x| {
            let r = m.norm_raw(x);
            (-4.0 * r * r).exp()
        })?,
        "one" => GridFunction::constant(domain, 1.0)?,
        other => bail!("unknown input fixture {other:?}; see `fracmax fixtures list`"),
    };
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_tagged_entries() {
        let cat = list_fixtures();
        let gauge = cat.iter().find(|e| e.id == "gauge-beta").unwrap();
        assert!(gauge.declared_beta && gauge.tags.contains(&"lipschitz"));
        let jump = cat.iter().find(|e| e.id == "jump").unwrap();
        assert!(jump.tags.contains(&"non-lipschitz"));
        assert_eq!(cat, list_fixtures());
    }

    #[test]
    fn catalog_tags_match_symbol_semantics() {
        let m = GroupModel::heisenberg();
        for e in list_fixtures().iter().filter(|e| e.role == Role::Symbol) {
            let k = symbol_kind(e.id, 0.5, &m).unwrap();
            assert_eq!(k.is_lipschitz(), e.tags.contains(&"lipschitz"), "{}", e.id);
            assert_eq!(k.is_nonnegative(), e.tags.contains(&"nonnegative"), "{}", e.id);
            k.validate(&m).unwrap();
        }
    }

    #[test]
    fn unknown_ids_are_rejected() {
        assert!(symbol_kind("nope", 0.5, &GroupModel::heisenberg()).is_err());
        let d = Arc::new(LatticeDomain::cube(GroupModel::heisenberg(), -1.0, 1.0, 0.25).unwrap());
        assert!(input_function("nope", &d).is_err());
    }
}
