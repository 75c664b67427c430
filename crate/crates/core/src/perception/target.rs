use std::cmp::Ordering;

use super::{Detection, PerceptionConfig, TofSample, TofStatus};

fn in_roi(d: &Detection, roi_frac: f64) -> bool {
    let half = roi_frac / 2.0;
    (d.bbox.cx - 0.5).abs() <= half && (d.bbox.cy - 0.5).abs() <= half
}

/// Preference order: higher confidence, then closer to the image center,
/// then lower class id. Remaining fields break exact ties so the result does
/// not depend on input order.
fn preference(a: &Detection, b: &Detection) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| a.center_offset().total_cmp(&b.center_offset()))
        .then_with(|| a.class_id.cmp(&b.class_id))
        .then_with(|| a.bbox.cx.total_cmp(&b.bbox.cx))
        .then_with(|| a.bbox.cy.total_cmp(&b.bbox.cy))
        .then_with(|| a.bbox.w.total_cmp(&b.bbox.w))
        .then_with(|| a.bbox.h.total_cmp(&b.bbox.h))
        .then_with(|| a.label.cmp(&b.label))
}

/// Picks the grasp target among confident detections inside the central ROI.
pub fn select_target<'a>(detections: &'a [Detection], cfg: &PerceptionConfig) -> Option<&'a Detection> {
    detections
        .iter()
        .filter(|d| d.confidence >= cfg.conf_min && in_roi(d, cfg.roi_frac))
        .min_by(|a, b| preference(a, b))
}

pub fn distance_gate(filtered: &TofSample, cfg: &PerceptionConfig) -> bool {
    filtered.status == TofStatus::Valid && filtered.range_mm <= cfg.d_grasp_mm
}
