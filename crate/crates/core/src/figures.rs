//! Tidy CSV tables for external plotting, built from experiment summaries.
//!
//! | id          | source       | columns                                               |
//! |-------------|--------------|-------------------------------------------------------|
//! | `fig4`      | runs         | series, epoch, pseudo_correctness                     |
//! | `fig5`      | runs         | series, epoch, member_mean, member_std, consensus     |
//! | `fig6`      | runs         | series, epoch, theta                                  |
//! | `fig7`      | sweeps       | series, k, alpha, p_drop, mean, std                   |
//! | `fig8`      | q sweeps     | series, q, mean, std                                  |
//! | `label-rate`| per-class sweeps | series, per_class, mean, std                      |
//!
//! The series name is the variant of each summary's config.

use std::fmt;
use std::str::FromStr;

use crate::experiment::{RunSummary, Summary, SweepSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    PseudoLabelCorrectness,
    MembersVsConsensus,
    Threshold,
    Sensitivity,
    NoisyEdges,
    LabelRate,
}

impl FromStr for Figure {
    type Err = FigureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fig4" => Figure::PseudoLabelCorrectness,
            "fig5" => Figure::MembersVsConsensus,
            "fig6" => Figure::Threshold,
            "fig7" => Figure::Sensitivity,
            "fig8" => Figure::NoisyEdges,
            "label-rate" => Figure::LabelRate,
            _ => return Err(FigureError::Unknown(s.into())),
        })
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::PseudoLabelCorrectness => "fig4",
            Figure::MembersVsConsensus => "fig5",
            Figure::Threshold => "fig6",
            Figure::Sensitivity => "fig7",
            Figure::NoisyEdges => "fig8",
            Figure::LabelRate => "label-rate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FigureError {
    #[error("unknown figure {0:?} (expected fig4..fig8 or label-rate)")]
    Unknown(String),
    #[error("{figure} needs {needs}, but none of the given results has it")]
    MissingResults { figure: Figure, needs: &'static str },
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn runs(summaries: &[Summary]) -> impl Iterator<Item = &RunSummary> {
    summaries.iter().filter_map(|s| match s {
        Summary::Run(r) => Some(r),
        Summary::Sweep(_) => None,
    })
}

fn sweeps(summaries: &[Summary]) -> impl Iterator<Item = &SweepSummary> {
    summaries.iter().filter_map(|s| match s {
        Summary::Sweep(s) => Some(s),
        Summary::Run(_) => None,
    })
}

/// Builds the CSV text of `figure` from the given summaries.
pub fn emit_figure_data(figure: Figure, summaries: &[Summary]) -> Result<String, FigureError> {
    let mut lines: Vec<String> = Vec::new();
    let needs;
    match figure {
        Figure::PseudoLabelCorrectness | Figure::MembersVsConsensus | Figure::Threshold => {
            lines.push(
                match figure {
                    Figure::PseudoLabelCorrectness => "series,epoch,pseudo_correctness",
                    Figure::MembersVsConsensus => "series,epoch,member_mean,member_std,consensus",
                    _ => "series,epoch,theta",
                }
                .into(),
            );
            needs = "an ensemble run";
            for r in runs(summaries) {
                let series = r.config.variant.to_string();
                for e in r.epochs.iter().filter(|e| e.theta.is_some()) {
                    lines.push(match figure {
                        Figure::PseudoLabelCorrectness => {
                            format!("{series},{},{}", e.epoch, cell(e.pseudo_correctness))
                        }
                        Figure::MembersVsConsensus => format!(
                            "{series},{},{},{},{}",
                            e.epoch,
                            cell(e.member_acc_mean),
                            cell(e.member_acc_std),
                            e.consensus_test_acc
                        ),
                        _ => format!("{series},{},{}", e.epoch, cell(e.theta)),
                    });
                }
            }
        }
        Figure::Sensitivity => {
            lines.push("series,k,alpha,p_drop,mean,std".into());
            needs = "a sweep over k, alpha or p_drop";
            for s in sweeps(summaries) {
                let c = &s.config;
                for row in s
                    .points
                    .iter()
                    .filter(|r| r.point.k.is_some() || r.point.alpha.is_some() || r.point.p_drop.is_some())
                {
                    let at = c.at_point(&row.point);
                    lines.push(format!(
                        "{},{},{},{},{},{}",
                        c.variant,
                        at.k,
                        at.alpha,
                        at.p_drop,
                        row.mean,
                        cell(row.std)
                    ));
                }
            }
        }
        Figure::NoisyEdges | Figure::LabelRate => {
            let noisy = figure == Figure::NoisyEdges;
            lines.push(
                if noisy {
                    "series,q,mean,std"
                } else {
                    "series,per_class,mean,std"
                }
                .into(),
            );
            needs = if noisy {
                "a sweep over q"
            } else {
                "a sweep over per_class"
            };
            for s in sweeps(summaries) {
                for row in &s.points {
                    let key = if noisy {
                        row.point.q.map(|q| q.to_string())
                    } else {
                        row.point.per_class.map(|p| p.to_string())
                    };
                    if let Some(key) = key {
                        lines.push(format!("{},{key},{},{}", s.config.variant, row.mean, cell(row.std)));
                    }
                }
            }
        }
    }
    if lines.len() == 1 {
        return Err(FigureError::MissingResults { figure, needs });
    }
    lines.push(String::new());
    Ok(lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DatasetSource, ExperimentConfig, SweepGrid, SweepPoint, Variant};
    use crate::data::SbmSpec;
    use crate::experiment::{EpochMean, SweepRow};

    fn config(variant: Variant) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(DatasetSource::Sbm(SbmSpec::fixture()));
        c.variant = variant;
        c
    }

    fn epoch(e: usize, plain: bool) -> EpochMean {
        let some = |v: f64| (!plain).then_some(v);
        EpochMean {
            epoch: e,
            consensus_loss: 1.0,
            consensus_val_acc: 0.5,
            consensus_test_acc: 0.5 + e as f64 / 100.0,
            s: some(0.1),
            theta: some(0.95 - e as f64 / 100.0),
            h_intersection: some(1.0),
            h_union: some(2.0),
            consensus_size: some(3.0),
            member_acc_mean: some(0.4),
            member_acc_std: some(0.02),
            pseudo_correctness: some(0.9),
        }
    }

    fn run(variant: Variant, epochs: usize) -> Summary {
        let plain = variant == Variant::BaselineGcn;
        Summary::Run(RunSummary {
            config: config(variant),
            trials: vec![],
            mean: 0.8,
            std: Some(0.01),
            best_member_mean: None,
            epochs: (1..=epochs).map(|e| epoch(e, plain)).collect(),
        })
    }

    fn sweep(variant: Variant, grid: SweepGrid) -> Summary {
        let c = ExperimentConfig {
            sweep: Some(grid.clone()),
            ..config(variant)
        };
        Summary::Sweep(SweepSummary {
            config: c,
            points: grid
                .points()
                .into_iter()
                .map(|point| SweepRow {
                    point,
                    accuracies: vec![0.8, 0.9],
                    mean: 0.85,
                    std: Some(0.07),
                    best_member_mean: None,
                })
                .collect(),
        })
    }

    #[test]
    fn per_epoch_figures_have_one_row_per_epoch() {
        let csv = emit_figure_data(Figure::Threshold, &[run(Variant::A3, 200)]).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 201);
        assert_eq!(lines[0], "series,epoch,theta");
        assert_eq!(lines[1], "a3,1,0.94");

        let csv = emit_figure_data(Figure::MembersVsConsensus, &[run(Variant::A3, 3)]).unwrap();
        assert!(csv.starts_with("series,epoch,member_mean,member_std,consensus\na3,1,0.4,0.02,0.51\n"));

        let csv = emit_figure_data(
            Figure::PseudoLabelCorrectness,
            &[run(Variant::A3, 2), run(Variant::Conservative, 2)],
        )
        .unwrap();
        assert_eq!(csv.lines().filter(|l| l.starts_with("conservative,")).count(), 2);
    }

    #[test]
    fn missing_results_are_reported() {
        let plain = run(Variant::BaselineGcn, 5);
        assert!(matches!(
            emit_figure_data(Figure::Threshold, std::slice::from_ref(&plain)),
            Err(FigureError::MissingResults { .. })
        ));
        assert!(emit_figure_data(Figure::NoisyEdges, &[plain]).is_err());
        let ks = sweep(
            Variant::A3,
            SweepGrid {
                k: Some(vec![1, 3]),
                ..Default::default()
            },
        );
        assert!(emit_figure_data(Figure::NoisyEdges, std::slice::from_ref(&ks)).is_err());
        assert_eq!(emit_figure_data(Figure::Sensitivity, &[ks]).unwrap().lines().count(), 3);
    }

    #[test]
    fn noise_figure_rows() {
        let grid = SweepGrid {
            q: Some(vec![0.0, 0.5, 1.5]),
            ..Default::default()
        };
        let csv = emit_figure_data(
            Figure::NoisyEdges,
            &[sweep(Variant::A3, grid.clone()), sweep(Variant::BaselineGcn, grid)],
        )
        .unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[1], "a3,0,0.85,0.07");
        assert_eq!(lines[6], "baseline-gcn,1.5,0.85,0.07");
        let _ = SweepPoint::default();
    }

    #[test]
    fn figure_ids_round_trip() {
        for id in ["fig4", "fig5", "fig6", "fig7", "fig8", "label-rate"] {
            assert_eq!(id.parse::<Figure>().unwrap().to_string(), id);
        }
        assert!("fig9".parse::<Figure>().is_err());
    }
}
