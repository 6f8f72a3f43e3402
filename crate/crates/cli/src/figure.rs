//! Plot-ready long-format records for the reference figure scenarios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use simo_noma::bounds::BoundVariant;
use simo_noma::simkernel::BerCurve;
use simo_noma::User;
use thiserror::Error;

/// Display cap for bound series. A union bound above one half says nothing.
pub const BOUND_DISPLAY_CAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3a,
    Fig3b,
    Fig3c,
    Fig4a,
    Fig4b,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{figure} expects {name} = {expected}, got {got}")]
pub struct FigureMismatch {
    pub figure: Figure,
    pub name: &'static str,
    pub expected: String,
    pub got: String,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::Fig3a,
        Figure::Fig3b,
        Figure::Fig3c,
        Figure::Fig4a,
        Figure::Fig4b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig3c => "fig3c",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
        }
    }

    /// `(M1, M2)` of the scenario.
    pub fn orders(self) -> (usize, usize) {
        match self {
            Figure::Fig3a => (16, 16),
            Figure::Fig3b => (32, 32),
            Figure::Fig3c => (64, 64),
            Figure::Fig4a => (64, 32),
            Figure::Fig4b => (64, 16),
        }
    }

    pub const ANTENNAS: usize = 4;
    pub const SIGMA_RATIO: f64 = 0.125;

    pub fn check(
        self,
        m1: usize,
        m2: usize,
        antennas: usize,
        sigma_ratio: f64,
    ) -> Result<(), FigureMismatch> {
        let (e1, e2) = self.orders();
        let mismatch = |name, expected: String, got: String| FigureMismatch {
            figure: self,
            name,
            expected,
            got,
        };
        if m1 != e1 {
            return Err(mismatch("m1", e1.to_string(), m1.to_string()));
        }
        if m2 != e2 {
            return Err(mismatch("m2", e2.to_string(), m2.to_string()));
        }
        if antennas != Self::ANTENNAS {
            return Err(mismatch(
                "antennas",
                Self::ANTENNAS.to_string(),
                antennas.to_string(),
            ));
        }
        if (sigma_ratio - Self::SIGMA_RATIO).abs() > 1e-12 {
            return Err(mismatch(
                "sigma_ratio",
                Self::SIGMA_RATIO.to_string(),
                sigma_ratio.to_string(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Figure::ALL
            .into_iter()
            .find(|fig| fig.name() == s)
            .ok_or_else(|| format!("unknown figure {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub figure: Figure,
    pub records: Vec<Record>,
}

impl FigureData {
    /// Distinct series labels in first-appearance order.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.series.as_str()) {
                out.push(&r.series);
            }
        }
        out
    }

    pub fn series(&self, label: &str) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter(|r| r.series == label)
            .map(|r| (r.x, r.y))
            .collect()
    }
}

pub fn emit_figure_data(curve: &BerCurve, figure: Figure) -> Result<FigureData, FigureMismatch> {
    figure.check(curve.m1, curve.m2, curve.antennas, curve.sigma_ratio)?;
    let mut records = Vec::new();
    for user in User::BOTH {
        for &d in &curve.detectors {
            let series = format!("{}_{}", user.label(), d.name());
            for (x, e) in curve.series(d, user) {
                records.push(Record {
                    series: series.clone(),
                    x,
                    y: e.ber,
                });
            }
        }
        for (variant, tag) in [
            (BoundVariant::Full, "bound_full"),
            (BoundVariant::Dominant, "bound_dom"),
        ] {
            let series = format!("{}_{tag}", user.label());
            for p in &curve.points {
                records.push(Record {
                    series: series.clone(),
                    x: p.sigma1_db,
                    y: p.bounds.get(user, variant).min(BOUND_DISPLAY_CAP),
                });
            }
        }
    }
    Ok(FigureData { figure, records })
}
