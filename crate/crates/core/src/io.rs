//! CSV files.
//!
//! - dataset: `n,type,j,j2,d,u`, one row per measurement. `type` is `A`
//!   (active, received at anchor `j`, `j2 = -1`) or `P` (passive, sent by
//!   anchor `j2` and received at anchor `j`). Anchors are one-based, `u` is
//!   the linear amplitude.
//! - ground truth: `n,p_x,p_y,v_x,v_y,m_x,m_y`.
//! - track: `n,m_x,m_y,p_x,p_y,v_x,v_y,b_rho,b_phi,r,w,ess,step_seconds`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Report;
use crate::scenario::Scenario;
use crate::synthesis::{Dataset, GroundTruth, TruthStep};
use crate::tracker::TrackOutput;
use crate::types::{KinematicState, Measurement, MeasurementFrame, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub n: usize,
    #[serde(rename = "type")]
    pub kind: char,
    pub j: usize,
    pub j2: i64,
    pub d: f64,
    pub u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub n: usize,
    pub p_x: f64,
    pub p_y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub m_x: f64,
    pub m_y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub n: usize,
    pub m_x: f64,
    pub m_y: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub b_rho: f64,
    pub b_phi: f64,
    pub r: f64,
    pub w: f64,
    pub ess: f64,
    pub step_seconds: f64,
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn dataset_records(dataset: &Dataset) -> Vec<MeasurementRecord> {
    let mut out = Vec::new();
    for f in &dataset.frames {
        for (j, list) in f.active.iter().enumerate() {
            out.extend(list.iter().map(|z| MeasurementRecord {
                n: f.step,
                kind: 'A',
                j: j + 1,
                j2: -1,
                d: z.distance,
                u: z.amplitude,
            }));
        }
        for link in &f.passive {
            out.extend(link.measurements.iter().map(|z| MeasurementRecord {
                n: f.step,
                kind: 'P',
                j: link.rx + 1,
                j2: link.tx as i64 + 1,
                d: z.distance,
                u: z.amplitude,
            }));
        }
    }
    out
}

pub fn write_dataset_to<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in dataset_records(dataset) {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    write_dataset_to(create(path)?, dataset)
}

/// Rebuilds the frames of `scenario` from dataset records.
pub fn read_dataset_from<R: Read>(reader: R, scenario: &Scenario) -> Result<Dataset> {
    let anchors = scenario.anchors.len();
    let mut frames: Vec<MeasurementFrame> = (1..=scenario.steps)
        .map(|n| MeasurementFrame::empty(n, anchors, scenario.include_self_pairs))
        .collect();
    let mismatch = |m: String| Error::DatasetMismatch(m);
    for row in csv::Reader::from_reader(reader).deserialize() {
        let r: MeasurementRecord = row?;
        if r.n < 1 || r.n > scenario.steps {
            return Err(mismatch(format!("step {} outside [1, {}]", r.n, scenario.steps)));
        }
        if r.j < 1 || r.j > anchors {
            return Err(mismatch(format!("unknown anchor {}", r.j)));
        }
        let z = Measurement::new(r.d, r.u);
        let frame = &mut frames[r.n - 1];
        match (r.kind, r.j2) {
            ('A', -1) => frame.active[r.j - 1].push(z),
            ('P', tx) if tx >= 1 && (tx as usize) <= anchors => {
                let tx = tx as usize - 1;
                frame
                    .link_mut(r.j - 1, tx)
                    .ok_or_else(|| mismatch(format!("passive link ({}, {}) is not part of the scenario", r.j, tx + 1)))?
                    .measurements
                    .push(z);
            }
            _ => return Err(mismatch(format!("bad record type `{}` with j2 = {}", r.kind, r.j2))),
        }
    }
    let dataset = Dataset {
        anchors,
        include_self_pairs: scenario.include_self_pairs,
        frames,
    };
    dataset.check_against(scenario)?;
    Ok(dataset)
}

pub fn read_dataset(path: &Path, scenario: &Scenario) -> Result<Dataset> {
    read_dataset_from(open(path)?, scenario)
}

pub fn write_truth_to<W: Write>(writer: W, truth: &GroundTruth) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in &truth.steps {
        w.serialize(TruthRecord {
            n: t.step,
            p_x: t.kinematic.position.x,
            p_y: t.kinematic.position.y,
            v_x: t.kinematic.velocity.x,
            v_y: t.kinematic.velocity.y,
            m_x: t.device.x,
            m_y: t.device.y,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_truth_to(create(path)?, truth)
}

/// Reads ground-truth rows; the fixed bias and extent come from `scenario`.
pub fn read_truth(path: &Path, scenario: &Scenario) -> Result<GroundTruth> {
    let mut steps = Vec::new();
    for row in csv::Reader::from_reader(open(path)?).deserialize() {
        let r: TruthRecord = row?;
        steps.push(TruthStep {
            step: r.n,
            kinematic: KinematicState::new(Vec2::new(r.p_x, r.p_y), Vec2::new(r.v_x, r.v_y)),
            device: Vec2::new(r.m_x, r.m_y),
        });
    }
    Ok(GroundTruth {
        steps,
        bias: scenario.true_bias(),
        extent: scenario.true_extent(),
    })
}

pub fn track_records(output: &TrackOutput) -> Vec<TrackRecord> {
    output
        .steps
        .iter()
        .map(|s| {
            let y = &s.estimate.state;
            TrackRecord {
                n: s.step,
                m_x: s.estimate.device.x,
                m_y: s.estimate.device.y,
                p_x: y.kinematic.position.x,
                p_y: y.kinematic.position.y,
                v_x: y.kinematic.velocity.x,
                v_y: y.kinematic.velocity.y,
                b_rho: y.bias.range,
                b_phi: y.bias.angle,
                r: y.extent.radius,
                w: y.extent.width,
                ess: s.ess,
                step_seconds: s.seconds,
            }
        })
        .collect()
}

pub fn write_track_to<W: Write>(writer: W, output: &TrackOutput) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in track_records(output) {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_track(path: &Path, output: &TrackOutput) -> Result<()> {
    write_track_to(create(path)?, output)
}

pub fn read_track(path: &Path) -> Result<Vec<TrackRecord>> {
    csv::Reader::from_reader(open(path)?)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    std::fs::write(path, report.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

/// `n,<variant>,...` table of per-step RMSE values.
pub fn write_rmse_csv(path: &Path, report: &Report) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["n".to_string()];
    header.extend(report.variants.iter().map(|v| v.key.clone()));
    header.push("blocked_anchors".into());
    w.write_record(&header)?;
    let steps = report.variants.first().map_or(0, |v| v.rmse_per_step.len());
    for n in 0..steps {
        let blocked = report
            .olos_windows
            .iter()
            .find(|o| (o.first..=o.last).contains(&(n + 1)))
            .map_or(0, |o| o.blocked_anchors);
        let mut row = vec![(n + 1).to_string()];
        row.extend(report.variants.iter().map(|v| v.rmse_per_step[n].to_string()));
        row.push(blocked.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `error,fraction` rows of one variant's CDF.
pub fn write_cdf_csv(path: &Path, cdf: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["error", "fraction"])?;
    for (e, f) in cdf {
        w.write_record([e.to_string(), f.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::synthesis;

    #[test]
    fn dataset_round_trip() {
        let s = Scenario::reference();
        let (_, data) = synthesis::simulate(&s, 12).unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,type,j,j2,d,u\n"));
        let back = read_dataset_from(buf.as_slice(), &s).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn rejects_foreign_records() {
        let s = Scenario::reference();
        for bad in [
            "n,type,j,j2,d,u\n181,A,1,-1,3.0,4.0\n",
            "n,type,j,j2,d,u\n1,A,4,-1,3.0,4.0\n",
            "n,type,j,j2,d,u\n1,P,1,1,3.0,4.0\n",
            "n,type,j,j2,d,u\n1,X,1,-1,3.0,4.0\n",
            "n,type,j,j2,d,u\n1,A,1,-1,30.0,4.0\n",
        ] {
            assert!(read_dataset_from(bad.as_bytes(), &s).is_err(), "{bad}");
        }
    }

    #[test]
    fn truth_header() {
        let s = Scenario::reference();
        let truth = synthesis::generate_ground_truth(&s).unwrap();
        let mut buf = Vec::new();
        write_truth_to(&mut buf, &truth).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert!(text.starts_with("n,p_x,p_y,v_x,v_y,m_x,m_y\n"));
        let expected = [1.0, 1.5, -2.0, -0.5, 0.0, 1.66, -2.0 - 0.32 * (PI / 3.0).sin()];
        for (a, b) in first.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(text.lines().count(), 181);
    }
}
