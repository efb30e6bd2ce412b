//! Report documents: JSON with a full configuration echo, plus a flat CSV.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AceError, Result};
use crate::metrics::{
    AceConfig, MetricReport, AE_REDUCTION, CE_REDUCTION, PSNR_CAP_DB, SSIM_WINDOW_NAME,
};
use crate::tvl1::TvL1Config;

pub const SCHEMA_VERSION: &str = "1";

/// Every setting that influenced the numbers in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub tvl1: TvL1Config,
    pub ace_epsilon: f64,
    pub emit_maps: bool,
    pub normalization: String,
    pub data_range: f64,
    pub flow_convention: String,
    pub ae_reduction: String,
    pub ce_reduction: String,
    pub ssim_window: String,
    pub psnr_cap_db: f64,
}

impl ConfigEcho {
    pub fn new(config: &AceConfig) -> Self {
        ConfigEcho {
            tvl1: config.tvl1,
            ace_epsilon: config.ace_epsilon,
            emit_maps: config.emit_maps,
            normalization: "joint min/max of observation and truth mapped to [0, 1]".into(),
            data_range: 1.0,
            flow_convention: "backward: to(x + v(x)) ~ from(x)".into(),
            ae_reduction: AE_REDUCTION.into(),
            ce_reduction: CE_REDUCTION.into(),
            ssim_window: SSIM_WINDOW_NAME.into(),
            psnr_cap_db: PSNR_CAP_DB,
        }
    }

    pub fn ace_config(&self) -> AceConfig {
        AceConfig {
            tvl1: self.tvl1,
            ace_epsilon: self.ace_epsilon,
            emit_maps: self.emit_maps,
        }
    }
}

/// Unweighted means over cases.
///
/// `mean_case_ace` is the mean of per-case ACE values; it is generally not
/// equal to ACE recomputed from the mean AE and mean CE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub case_count: usize,
    pub ae: f64,
    pub ce: f64,
    pub mean_case_ace: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

impl Aggregate {
    pub fn from_cases(cases: &[MetricReport]) -> Self {
        let n = cases.len();
        let mean = |f: fn(&MetricReport) -> f64| {
            if n == 0 {
                0.0
            } else {
                cases.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Aggregate {
            case_count: n,
            ae: mean(|c| c.ae),
            ce: mean(|c| c.ce),
            mean_case_ace: mean(|c| c.ace),
            mae: mean(|c| c.mae),
            mse: mean(|c| c.mse),
            rmse: mean(|c| c.rmse),
            psnr: mean(|c| c.psnr),
            ssim: mean(|c| c.ssim),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub config_echo: ConfigEcho,
    pub cases: Vec<MetricReport>,
    pub aggregate: Aggregate,
}

impl ReportDocument {
    /// Sorts cases by id and computes the aggregate.
    pub fn new(config: &AceConfig, mut cases: Vec<MetricReport>) -> Self {
        cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let aggregate = Aggregate::from_cases(&cases);
        ReportDocument {
            schema_version: SCHEMA_VERSION.into(),
            config_echo: ConfigEcho::new(config),
            cases,
            aggregate,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDocument = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(AceError::InvalidConfig(format!(
                "unsupported report schema version `{}`",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| AceError::from(e).in_file(path))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| AceError::from(e).in_file(path))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }

    /// One row per case.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        #[derive(Serialize)]
        struct Row<'a> {
            case_id: &'a str,
            ae: f64,
            ce: f64,
            ace: f64,
            mae: f64,
            mse: f64,
            rmse: f64,
            psnr: f64,
            ssim: f64,
            norm_offset: f64,
            norm_scale: f64,
            ae_map: &'a str,
            ce_map: &'a str,
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        for c in &self.cases {
            writer.serialize(Row {
                case_id: &c.case_id,
                ae: c.ae,
                ce: c.ce,
                ace: c.ace,
                mae: c.mae,
                mse: c.mse,
                rmse: c.rmse,
                psnr: c.psnr,
                ssim: c.ssim,
                norm_offset: c.normalization.offset,
                norm_scale: c.normalization.scale,
                ae_map: c.map_paths.as_ref().map_or("", |m| m.ae.as_str()),
                ce_map: c.map_paths.as_ref().map_or("", |m| m.ce.as_str()),
            })?;
        }
        writer
            .into_inner()
            .map_err(|e| AceError::Io(e.into_error()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()?).map_err(|e| AceError::from(e).in_file(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NormalizationTransform;
    use crate::metrics::MapPaths;

    fn report(id: &str, ae: f64, ce: f64) -> MetricReport {
        MetricReport {
            case_id: id.into(),
            ae,
            ce,
            ace: ae + ce / ae,
            mae: 0.1,
            mse: 0.0123456789,
            rmse: 0.0123456789f64.sqrt(),
            psnr: 19.08485,
            ssim: 0.93,
            normalization: NormalizationTransform {
                offset: 250.0,
                scale: 1.0 / 60.0,
            },
            maps: None,
            map_paths: None,
        }
    }

    #[test]
    fn json_round_trip() {
        let mut cases = vec![report("b", 0.3, 0.1), report("a", 1.97, 0.23)];
        cases[0].map_paths = Some(MapPaths {
            ae: "maps/b_ae.pgm".into(),
            ce: "maps/b_ce.pgm".into(),
        });
        let doc = ReportDocument::new(&AceConfig::default(), cases);
        assert_eq!(doc.cases[0].case_id, "a");
        let back = ReportDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.config_echo.ace_config(), AceConfig::default());
    }

    #[test]
    fn aggregate_stores_mean_of_case_ace() {
        let doc = ReportDocument::new(
            &AceConfig::default(),
            vec![report("a", 1.0, 1.0), report("b", 0.5, 0.0)],
        );
        assert_eq!(doc.aggregate.case_count, 2);
        assert_eq!(doc.aggregate.mean_case_ace, 1.25);
        // ACE of the means would be 0.75 + 0.5 / 0.75
        assert_ne!(doc.aggregate.mean_case_ace, 0.75 + 0.5 / 0.75);
    }

    #[test]
    fn csv_has_one_row_per_case() {
        let doc = ReportDocument::new(
            &AceConfig::default(),
            vec![report("a", 1.0, 1.0), report("b", 0.5, 0.0)],
        );
        let text = String::from_utf8(doc.to_csv().unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("case_id,ae,ce,ace,"));
        assert!(lines[1].starts_with("a,1.0,1.0,2.0,"));
    }

    #[test]
    fn rejects_unknown_schema() {
        let doc = ReportDocument::new(&AceConfig::default(), vec![]);
        let text = doc
            .to_json()
            .unwrap()
            .replace("\"schema_version\": \"1\"", "\"schema_version\": \"9\"");
        assert!(ReportDocument::from_json(&text).is_err());
    }
}
