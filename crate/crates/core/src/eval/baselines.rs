//! Comparison methods.

use crate::estimators::pointing_angle;
use crate::{ParsedQuery, SemanticMap, UserObservation};

/// Same-class object closest to the pointing ray. `None` without a class
/// term, a class match, or a skeleton.
pub fn baseline_vgpn(map: &SemanticMap, query: &ParsedQuery, obs: &UserObservation) -> Option<String> {
    let class = query.class_term.as_deref()?;
    obs.skeleton()?;
    map.objects()
        .iter()
        .filter(|o| o.class_label == class)
        .filter_map(|o| pointing_angle(obs, o.position).ok().map(|a| (a, &o.id)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, id)| id.clone())
}
