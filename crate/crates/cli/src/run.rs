//! Parsed run specification shared by all commands.

use std::cell::RefCell;

use rcm_core::graphcore::Caps;
use rcm_core::oracle::ModelParams;
use rcm_core::scalar::APPROX_PRECISION_BITS;
use rcm_core::{BoundaryCondition, HostGraph, RcmError, Result, Scalar, TemplateSpec};

use crate::report::Report;
use crate::{Bc, RunArgs};

pub struct Run {
    pub args: RunArgs,
    pub graph: Option<HostGraph>,
    pub caps: Caps,
    pub bc: BoundaryCondition,
    /// Margin checks performed so far, echoed into the report header.
    pub checks: RefCell<Vec<String>>,
}

fn parse_margin(s: &str) -> Result<usize> {
    s.strip_prefix('m')
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| RcmError::Parse(format!("bad margin {s:?}, expected mM")))
}

fn parse_num(s: &str, what: &str) -> Result<usize> {
    s.parse().map_err(|_| RcmError::Parse(format!("bad {what} {s:?}")))
}

/// `zd:AxBxC[:mM]`, `tree:K:DEPTH[:mM]` or a JSON template.
pub fn parse_template(text: &str) -> Result<TemplateSpec> {
    let t = text.trim();
    if t.starts_with('{') {
        return TemplateSpec::from_json(t);
    }
    let parts: Vec<&str> = t.split(':').collect();
    match parts.as_slice() {
        ["zd", dims, rest @ ..] if rest.len() <= 1 => {
            let dims = dims.split('x').map(|d| parse_num(d, "dimension")).collect::<Result<Vec<_>>>()?;
            let margin = rest.first().map(|m| parse_margin(m)).transpose()?.unwrap_or(0);
            Ok(TemplateSpec::zd(&dims, margin))
        }
        ["tree", k, depth, rest @ ..] if rest.len() <= 1 => {
            let margin = rest.first().map(|m| parse_margin(m)).transpose()?.unwrap_or(0);
            Ok(TemplateSpec::tree(parse_num(k, "degree")?, parse_num(depth, "depth")?, margin))
        }
        _ => Err(RcmError::Parse(format!("unrecognised template {t:?}"))),
    }
}

fn with_margin(spec: TemplateSpec, m: usize) -> TemplateSpec {
    match spec {
        TemplateSpec::Zd { dims, .. } => TemplateSpec::Zd { dims, margin: m },
        TemplateSpec::Tree { degree, depth, .. } => TemplateSpec::Tree { degree, depth, margin: m },
        other => other,
    }
}

impl Run {
    pub fn new(args: &RunArgs) -> Result<Run> {
        let spec = match (&args.template, &args.graph_file) {
            (Some(t), _) => Some(parse_template(t)?),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| RcmError::Parse(format!("{}: {e}", path.display())))?;
                Some(TemplateSpec::from_json(&text)?)
            }
            (None, None) => None,
        };
        let spec = match (spec, args.margin) {
            (Some(s), Some(m)) => Some(with_margin(s, m)),
            (s, _) => s,
        };
        let graph = spec.as_ref().map(HostGraph::build).transpose()?;
        let mut caps = Caps::default();
        if let Some(c) = args.cap_polymer {
            caps.polymer = c;
        }
        if let Some(c) = args.cap_edges {
            caps.edge_set = c;
        }
        if let Some(c) = args.cap_oracle {
            caps.oracle_edges = c;
        }
        if let Some(c) = args.cap_ursell {
            caps.ursell = c;
        }
        let bc = match args.bc {
            Bc::Free => BoundaryCondition::Free,
            Bc::Wired => BoundaryCondition::Wired,
        };
        Ok(Run { args: args.clone(), graph, caps, bc, checks: RefCell::new(Vec::new()) })
    }

    pub fn g(&self) -> Result<&HostGraph> {
        self.graph
            .as_ref()
            .ok_or_else(|| RcmError::Parse("this command needs --template or --graph-file".into()))
    }

    pub fn params(&self) -> Result<ModelParams> {
        let p = self.args.p.as_deref().ok_or_else(|| RcmError::Parse("--p is required".into()))?;
        ModelParams::new(Scalar::parse(p, self.args.exact)?, Scalar::parse(&self.args.q, self.args.exact)?, self.bc)
    }

    /// X from `--X`, or the window center.
    pub fn xs(&self) -> Result<Vec<usize>> {
        let g = self.g()?;
        let xs = match &self.args.x {
            Some(text) => g.parse_vertices(text)?,
            None => vec![g.window_center()],
        };
        if xs.is_empty() {
            return Err(RcmError::Parse("--X names no vertex".into()));
        }
        if let Some(&v) = xs.iter().find(|&&v| !g.in_window(v)) {
            return Err(RcmError::Precondition(format!("{} is outside the window", g.name(v))));
        }
        Ok(xs)
    }

    pub fn check(&self, what: impl Into<String>) {
        let what = what.into();
        let mut c = self.checks.borrow_mut();
        if !c.contains(&what) {
            c.push(what);
        }
    }

    /// Report with the common header: parameters, mode, caps and margins.
    pub fn report(&self, command: &str, columns: &[&str]) -> Report {
        let mut r = Report::new(command, columns);
        if let Some(g) = &self.graph {
            r.meta("template", g.template().to_json());
            r.meta("margin", g.margin());
        }
        if let Some(p) = &self.args.p {
            r.meta("p", p);
        }
        r.meta("q", &self.args.q);
        r.meta("bc", format!("{:?}", self.bc).to_lowercase());
        r.meta("K", self.args.k);
        if self.args.exact {
            r.meta("mode", "exact");
        } else {
            r.meta("mode", "approx");
            r.meta("precision_bits", APPROX_PRECISION_BITS);
        }
        let c = &self.caps;
        r.meta(
            "caps",
            format!("polymer={};edge_set={};oracle_edges={};ursell={}", c.polymer, c.edge_set, c.oracle_edges, c.ursell),
        );
        r
    }

    /// Final header entries gathered while running.
    pub fn finish(&self, mut r: Report, threshold: Option<String>) -> Report {
        r.meta("threshold_status", threshold.unwrap_or_else(|| "n/a".into()));
        let checks = self.checks.borrow();
        r.meta("margin_checks", if checks.is_empty() { "none".to_string() } else { checks.join(";") });
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_templates() {
        assert_eq!(parse_template("zd:5x5").unwrap(), TemplateSpec::zd(&[5, 5], 0));
        assert_eq!(parse_template("zd:9x7:m2").unwrap(), TemplateSpec::zd(&[9, 7], 2));
        assert_eq!(parse_template("tree:3:4:m1").unwrap(), TemplateSpec::tree(3, 4, 1));
        assert_eq!(parse_template(r#"{"template":"zd","dims":[3]}"#).unwrap(), TemplateSpec::zd(&[3], 0));
        assert!(parse_template("zd:5y5").is_err());
        assert!(parse_template("cube:3").is_err());
        assert!(parse_template("zd:5x5:2").is_err());
    }
}
