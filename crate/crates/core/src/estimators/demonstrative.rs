use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::map::SemanticMap;
use crate::perception::UserObservation;
use crate::query::DemonstrativeSeries;
use crate::scalar::Scalar;

use super::{gaussian3_log_pdf, DemonstrativeModel, ScoreDistribution};

/// Center of the demonstrative region: the wrist (KO), the robot (SO), or
/// the pointer tip `wrist + λ·unit(wrist - eye)` (A). The tip is not clamped
/// to the floor.
pub fn demonstrative_mean<T: Scalar>(
    series: DemonstrativeSeries,
    obs: &UserObservation<T>,
    robot_pos: Vec3<T>,
    model: &DemonstrativeModel<T>,
) -> Result<Vec3<T>> {
    match series {
        DemonstrativeSeries::So => {
            if robot_pos.is_finite() {
                Ok(robot_pos)
            } else {
                Err(Error::NonFinite("robot position"))
            }
        }
        DemonstrativeSeries::Ko => obs.skeleton().map(|(_, wrist)| wrist).ok_or(Error::SkeletonMissing),
        DemonstrativeSeries::A => {
            let (eye, wrist) = obs.skeleton().ok_or(Error::SkeletonMissing)?;
            let dir = (wrist - eye)
                .normalized()
                .ok_or(Error::Degenerate("eye and wrist coincide"))?;
            Ok(wrist + dir * model.pointer_tip_distance)
        }
        other => Err(Error::UnsupportedSeries(other)),
    }
}

pub(crate) fn sigma_for<T: Scalar>(series: DemonstrativeSeries, model: &DemonstrativeModel<T>) -> T {
    match series {
        DemonstrativeSeries::Ko => model.sigma_ko,
        DemonstrativeSeries::So => model.sigma_so,
        _ => model.sigma_a,
    }
}

/// P2: Gaussian density of each object's position under the active region.
/// Falls back to uniform when the series has no region or its anchor is
/// unavailable.
pub fn estimate_demonstrative<T: Scalar>(
    map: &SemanticMap<T>,
    series: DemonstrativeSeries,
    obs: &UserObservation<T>,
    robot_pos: Vec3<T>,
    model: &DemonstrativeModel<T>,
) -> Result<ScoreDistribution<T>> {
    map.ensure_non_empty()?;
    model.validate()?;
    let mean = match demonstrative_mean(series, obs, robot_pos, model) {
        Ok(m) => m,
        Err(Error::SkeletonMissing | Error::UnsupportedSeries(_) | Error::Degenerate(_) | Error::NonFinite(_)) => {
            return Ok(ScoreDistribution::uniform_over(map))
        }
        Err(e) => return Err(e),
    };
    let sigma = sigma_for(series, model);
    let log_w = map
        .objects()
        .iter()
        .map(|o| gaussian3_log_pdf(o.position, mean, sigma))
        .collect::<Result<Vec<T>>>()?;
    ScoreDistribution::from_log_weights(map.ids(), log_w)
}
