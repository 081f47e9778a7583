use super::stream::Stroke;
use super::KINEMATIC_DIM;
use crate::error::{Error, Result};
use crate::frames::{FeatureSet, FrameSequence};

pub const KINEMATIC_NAMES: [&str; KINEMATIC_DIM] = [
    "x",
    "y",
    "r",
    "theta",
    "vx",
    "vy",
    "vr",
    "vtheta",
    "ax",
    "ay",
    "ar",
    "atheta",
    "pressure",
    "azimuth",
    "altitude",
    "d_pressure",
    "d_azimuth",
    "d_altitude",
    "speed",
    "path_acc",
    "in_air",
];

/// Reference point for positions and the polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Origin {
    /// Centroid of every sample of the task.
    #[default]
    Centroid,
    Fixed(f64, f64),
}

#[derive(Debug, Clone)]
pub struct Kinematics {
    pub frames: FrameSequence,
    /// Indices of strokes too short for a second derivative; their
    /// accelerations are held at zero.
    pub flagged: Vec<usize>,
}

/// Derivative on actual timestamps: central differences inside, one-sided at
/// the ends. A single sample has derivative zero.
fn differentiate(v: &[f64], t: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (v[b] - v[a]) / (t[b] - t[a])
        })
        .collect()
}

fn unwrap_angles(theta: &mut [f64]) {
    use std::f64::consts::{PI, TAU};
    for i in 1..theta.len() {
        let mut d = theta[i] - theta[i - 1];
        while d > PI {
            d -= TAU;
        }
        while d < -PI {
            d += TAU;
        }
        theta[i] = theta[i - 1] + d;
    }
}

/// Per-sample kinematic frames for every stroke of a task, in order.
pub fn kinematic_analysis(strokes: &[Stroke], origin: Origin) -> Result<Kinematics> {
    let all = strokes.iter().flat_map(|s| &s.samples);
    let total = all.clone().count();
    if total == 0 {
        return Err(Error::invalid("no pen samples"));
    }
    let (cx, cy) = match origin {
        Origin::Centroid => {
            let (sx, sy) = all.clone().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
            (sx / total as f64, sy / total as f64)
        }
        Origin::Fixed(x, y) => (x, y),
    };
    let mut theta: Vec<f64> = all.map(|p| (p.y - cy).atan2(p.x - cx)).collect();
    unwrap_angles(&mut theta);

    let mut data = Vec::with_capacity(total * KINEMATIC_DIM);
    let mut flagged = Vec::new();
    let mut offset = 0;
    for (k, stroke) in strokes.iter().enumerate() {
        let n = stroke.len();
        let th = &theta[offset..offset + n];
        offset += n;
        if n < 2 {
            continue;
        }
        if n < 3 {
            flagged.push(k);
        }
        let col = |f: &dyn Fn(&super::PenSample) -> f64| stroke.samples.iter().map(f).collect::<Vec<f64>>();
        let t = col(&|p| p.t);
        let x = col(&|p| p.x - cx);
        let y = col(&|p| p.y - cy);
        let r: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.hypot(*b)).collect();
        let pressure = col(&|p| p.pressure);
        let azimuth = col(&|p| p.azimuth);
        let altitude = col(&|p| p.altitude);

        let d = |v: &[f64]| differentiate(v, &t);
        let second = |v: &[f64]| {
            if n < 3 {
                vec![0.0; n]
            } else {
                d(v)
            }
        };
        let (vx, vy, vr, vth) = (d(&x), d(&y), d(&r), d(th));
        let (ax, ay, ar, ath) = (second(&vx), second(&vy), second(&vr), second(&vth));
        let speed: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).collect();
        let path_acc = second(&speed);
        let (dp, daz, dal) = (d(&pressure), d(&azimuth), d(&altitude));
        let air = if stroke.in_air() { 1.0 } else { 0.0 };
        for i in 0..n {
            data.extend_from_slice(&[
                x[i],
                y[i],
                r[i],
                th[i],
                vx[i],
                vy[i],
                vr[i],
                vth[i],
                ax[i],
                ay[i],
                ar[i],
                ath[i],
                pressure[i],
                azimuth[i],
                altitude[i],
                dp[i],
                daz[i],
                dal[i],
                speed[i],
                path_acc[i],
                air,
            ]);
        }
    }
    if data.is_empty() {
        return Err(Error::TooShort {
            what: "pen stroke (samples)",
            needed: 2,
            got: 1,
        });
    }
    if !flagged.is_empty() {
        log::warn!(
            "{} stroke(s) shorter than 3 samples; acceleration held at zero",
            flagged.len()
        );
    }
    let frames = FrameSequence::new(data, KINEMATIC_DIM)?.with_feature_set(FeatureSet::Kinematic)?;
    Ok(Kinematics { frames, flagged })
}

pub fn kinematic_features(strokes: &[Stroke], origin: Origin) -> Result<FrameSequence> {
    kinematic_analysis(strokes, origin).map(|k| k.frames)
}
