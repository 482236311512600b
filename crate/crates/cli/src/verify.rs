use std::path::Path;

use clap::ValueEnum;
use nsg_core::lab::{self, LemmaReport};
use nsg_core::report::{write_atomic, write_kahane_csv};
use nsg_core::{Grid, Result};

use crate::EXIT_ASSERTION;

const KAHANE_MAX: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lp,
    Gevrey,
    Kahane,
    Leibniz,
    Heat,
    Bernstein,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Lp => "lp",
            Suite::Gevrey => "gevrey",
            Suite::Kahane => "kahane",
            Suite::Leibniz => "leibniz",
            Suite::Heat => "heat",
            Suite::Bernstein => "bernstein",
            Suite::All => "all",
        }
    }
}

fn grids(pairs: &[(usize, usize)]) -> Result<Vec<Grid>> {
    pairs.iter().map(|&(d, n)| Grid::new(d, n)).collect()
}

fn reports(suite: Suite) -> Result<Vec<LemmaReport>> {
    Ok(match suite {
        Suite::Lp => vec![lab::lp_report(&grids(&[(2, 16), (2, 32), (2, 64), (3, 16), (3, 32), (3, 64)])?)?],
        Suite::Gevrey => lab::gevrey_reports()?,
        Suite::Kahane => vec![lab::kahane_report(KAHANE_MAX)?],
        Suite::Leibniz => vec![lab::leibniz_report()?],
        Suite::Heat => {
            vec![lab::heat_gevrey_report(Grid::new(2, 128)?, 2.0)?, lab::heat_localization_report(Grid::new(2, 64)?)?]
        }
        Suite::Bernstein => vec![lab::bernstein_report(Grid::new(2, 64)?)?, lab::bernstein_report(Grid::new(3, 32)?)?],
        Suite::All => unreachable!(),
    })
}

fn run_one(suite: Suite, out: &Path) -> Result<bool> {
    let reps = reports(suite)?;
    let json = serde_json::to_vec_pretty(&reps).map_err(|e| nsg_core::NsgError::Format(e.to_string()))?;
    write_atomic(&out.join(format!("{}.json", suite.name())), &json)?;
    if suite == Suite::Kahane {
        let mut buf = Vec::new();
        write_kahane_csv(&mut buf, &lab::kahane_table(KAHANE_MAX)?)?;
        write_atomic(&out.join("kahane.csv"), &buf)?;
    }
    for r in &reps {
        let tag = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {}: {}; measured {:.6e}; worst {}",
            r.lemma_id, r.range_tested, r.measured_constant, r.worst_case
        );
    }
    Ok(reps.iter().all(LemmaReport::passed))
}

pub fn run(suite: Suite, out: &Path) -> Result<u8> {
    let suites = match suite {
        Suite::All => vec![Suite::Lp, Suite::Gevrey, Suite::Kahane, Suite::Leibniz, Suite::Heat, Suite::Bernstein],
        s => vec![s],
    };
    let mut ok = true;
    for s in suites {
        ok &= run_one(s, out)?;
    }
    Ok(if ok { 0 } else { EXIT_ASSERTION })
}
