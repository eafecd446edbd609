use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::map::SemanticMap;
use crate::perception::UserObservation;
use crate::scalar::Scalar;

use super::{von_mises_log_pdf, PointingModel, ScoreDistribution};

/// Angle in `[0, π]` between the pointing vector (eye → wrist) and the
/// object direction vector (eye → object).
pub fn pointing_angle<T: Scalar>(obs: &UserObservation<T>, object_pos: Vec3<T>) -> Result<T> {
    let (eye, wrist) = obs.skeleton().ok_or(Error::SkeletonMissing)?;
    let pointing = wrist - eye;
    if pointing.norm_squared() == T::zero() {
        return Err(Error::Degenerate("eye and wrist coincide"));
    }
    (object_pos - eye)
        .angle_to(pointing)
        .ok_or(Error::Degenerate("object coincides with the eye"))
}

/// P3: von Mises density of each object's pointing angle. Uniform when no
/// skeleton or no pointing gesture was observed.
pub fn estimate_pointing<T: Scalar>(
    map: &SemanticMap<T>,
    obs: &UserObservation<T>,
    model: &PointingModel<T>,
) -> Result<ScoreDistribution<T>> {
    map.ensure_non_empty()?;
    model.validate()?;
    if !obs.has_pointing || obs.skeleton().is_none() {
        return Ok(ScoreDistribution::uniform_over(map));
    }
    let mut log_w = Vec::with_capacity(map.len());
    for o in map.objects() {
        let theta = match pointing_angle(obs, o.position) {
            Ok(t) => t,
            Err(Error::Degenerate("eye and wrist coincide")) => {
                return Ok(ScoreDistribution::uniform_over(map));
            }
            // An object at the eye carries no directional evidence.
            Err(Error::Degenerate(_)) => T::FRAC_PI_2(),
            Err(e) => return Err(e),
        };
        log_w.push(von_mises_log_pdf(theta, model.kappa)?);
    }
    ScoreDistribution::from_log_weights(map.ids(), log_w)
}
