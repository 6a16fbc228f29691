//! Deterministic result/summary writers.
//!
//! CSV files use a stable column order, LF line endings, and floats printed
//! with 9 significant digits, so a rerun with the same seed is byte-identical.

use std::fs;
use std::path::Path;

use crate::benchmarks::{CaseId, CaseResult, GridPoint, ResultRow, SummaryRow};
use crate::error::Result;

/// Scientific notation with 9 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{:.8e}", x)
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

const TAIL_COLUMNS: &str = "psi_ie,psi_ave,psi_pr_raw,psi_pr,psi_com,psi_pr_pu,psi_com_pu,\
lambda1,lambda2,lambda3,i_x,i_y,i_z,doa_az_deg,doa_zen_deg,doa_err_deg,clamp_count";

fn grid_columns(case: CaseId) -> &'static str {
    match case {
        CaseId::Case1 => "az_deg,zen_deg",
        CaseId::Case2 | CaseId::Irmix => "eta",
        CaseId::Case3 => "sep_deg",
    }
}

fn grid_fields(grid: &GridPoint) -> String {
    match grid {
        GridPoint::Incidence { az_deg, zen_deg } => {
            format!("{},{}", format_float(*az_deg), format_float(*zen_deg))
        }
        GridPoint::Eta(eta) => format_float(*eta),
        GridPoint::Separation(deg) => format_float(*deg),
    }
}

/// Render `results.csv` for one case run.
pub fn results_csv(case: CaseId, array: &str, rows: &[ResultRow]) -> String {
    let mut out = format!("case,array,band_hz,{},{}\n", grid_columns(case), TAIL_COLUMNS);
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            case.label(),
            array,
            format_float(r.band_hz),
            grid_fields(&r.grid),
            opt(r.psi_ie),
            opt(r.psi_ave),
            format_float(r.psi_pr_raw),
            format_float(r.psi_pr),
            format_float(r.psi_com),
            opt(r.psi_pr_pu),
            opt(r.psi_com_pu),
            format_float(r.eigenvalues[0]),
            format_float(r.eigenvalues[1]),
            format_float(r.eigenvalues[2]),
            format_float(r.intensity[0]),
            format_float(r.intensity[1]),
            format_float(r.intensity[2]),
            opt(r.doa_az_deg),
            opt(r.doa_zen_deg),
            opt(r.doa_err_deg),
            r.clamp_count,
        ));
    }
    out
}

/// Render `summary.csv` for one case run.
pub fn summary_csv(case: CaseId, array: &str, rows: &[SummaryRow]) -> String {
    let mut out = match case {
        CaseId::Case1 => String::from("case,array,band_hz,index_name,mean_value\n"),
        CaseId::Case2 | CaseId::Irmix => {
            String::from("case,array,band_hz,index_name,max_abs_err,pearson_r\n")
        }
        CaseId::Case3 => {
            String::from("case,array,band_hz,index_name,value_0deg,value_90deg,value_180deg\n")
        }
    };
    for row in rows {
        match row {
            SummaryRow::Mean { band_hz, index, mean } => out.push_str(&format!(
                "{},{},{},{},{}\n",
                case.label(),
                array,
                format_float(*band_hz),
                index,
                format_float(*mean)
            )),
            SummaryRow::LinearityError {
                band_hz,
                index,
                max_abs_err,
                pearson_r,
            } => out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                case.label(),
                array,
                format_float(*band_hz),
                index,
                format_float(*max_abs_err),
                format_float(*pearson_r)
            )),
            SummaryRow::AngleAnchors {
                band_hz,
                index,
                at_0,
                at_90,
                at_180,
            } => out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                case.label(),
                array,
                format_float(*band_hz),
                index,
                format_float(*at_0),
                format_float(*at_90),
                format_float(*at_180)
            )),
        }
    }
    out
}

/// Write `results.csv`, `results.json`, `summary.csv`, `config.echo.json`.
pub fn write_reports(dir: &Path, result: &CaseResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("results.csv"),
        results_csv(result.case, &result.array, &result.rows),
    )?;
    fs::write(
        dir.join("results.json"),
        serde_json::to_string_pretty(&result.rows)?,
    )?;
    fs::write(
        dir.join("summary.csv"),
        summary_csv(result.case, &result.array, &result.summary),
    )?;
    fs::write(
        dir.join("config.echo.json"),
        serde_json::to_string_pretty(&result.config_echo)?,
    )?;
    Ok(())
}
