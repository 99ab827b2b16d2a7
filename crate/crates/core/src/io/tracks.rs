//! Trajectory sanitation against object masks and image borders.

use crate::types::{LabelMap, TrackSet};

/// Drops track points lying outside their own object's mask (tested at the
/// nearest pixel) or within `edge_margin` pixels of a border, then drops
/// tracks left with fewer than `min_len` points. Frames with no mask are
/// treated as off-mask.
pub fn sanitize_tracks(tracks: &TrackSet, masks: &[&LabelMap], edge_margin: f64, min_len: usize) -> TrackSet {
    let keep = |object_id: u16, frame: usize, x: f64, y: f64| -> bool {
        let Some(mask) = masks.get(frame) else { return false };
        let (w, h) = (mask.width as f64, mask.height as f64);
        if !(x >= edge_margin && y >= edge_margin && x <= w - 1.0 - edge_margin && y <= h - 1.0 - edge_margin) {
            return false;
        }
        let (px, py) = (x.round(), y.round());
        if px < 0.0 || py < 0.0 || px >= w || py >= h {
            return false;
        }
        mask.get(px as usize, py as usize) == object_id
    };
    let tracks = tracks
        .tracks
        .iter()
        .filter_map(|t| {
            let mut t = t.clone();
            t.points.retain(|p| keep(t.object_id, p.frame, p.x, p.y));
            (t.points.len() >= min_len.max(1)).then_some(t)
        })
        .collect();
    TrackSet { tracks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Track, TrackPoint};

    fn masks(n: usize) -> Vec<LabelMap> {
        (0..n)
            .map(|m| {
                // object 2 occupies x in [10, 20) until frame 5, then moves away
                let mut map = LabelMap::filled(40, 30, 1);
                let x0 = if m < 5 { 10 } else { 25 };
                for y in 10..20 {
                    for x in x0..x0 + 10 {
                        map.labels[y * 40 + x] = 2;
                    }
                }
                map
            })
            .collect()
    }

    fn track(object_id: u16, pts: &[(usize, f64, f64)]) -> Track {
        Track {
            track_id: 0,
            object_id,
            points: pts.iter().map(|&(frame, x, y)| TrackPoint { frame, x, y }).collect(),
        }
    }

    #[test]
    fn point_leaving_mask_is_dropped() {
        let maps = masks(7);
        let refs: Vec<&LabelMap> = maps.iter().collect();
        let pts: Vec<(usize, f64, f64)> = (0..7).map(|m| (m, 15.0, 15.0)).collect();
        let out = sanitize_tracks(&TrackSet { tracks: vec![track(2, &pts)] }, &refs, 8.0, 2);
        let frames: Vec<usize> = out.tracks[0].points.iter().map(|p| p.frame).collect();
        assert_eq!(frames, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn border_points_are_dropped() {
        let maps = masks(3);
        let refs: Vec<&LabelMap> = maps.iter().collect();
        let t = track(1, &[(0, 1.0, 15.0), (1, 9.0, 9.0), (2, 30.0, 25.0)]);
        let out = sanitize_tracks(&TrackSet { tracks: vec![t] }, &refs, 8.0, 1);
        let xs: Vec<f64> = out.tracks[0].points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![9.0]);
    }

    #[test]
    fn short_tracks_removed() {
        let maps = masks(3);
        let refs: Vec<&LabelMap> = maps.iter().collect();
        let t = track(1, &[(0, 1.0, 15.0), (1, 9.0, 9.0)]);
        assert!(sanitize_tracks(&TrackSet { tracks: vec![t] }, &refs, 8.0, 2).tracks.is_empty());
    }

    #[test]
    fn clean_tracks_unchanged() {
        let maps = masks(4);
        let refs: Vec<&LabelMap> = maps.iter().collect();
        let set = TrackSet {
            tracks: vec![track(2, &[(0, 12.0, 12.0), (1, 13.0, 12.5)]), track(1, &[(2, 30.0, 12.0), (3, 31.0, 12.0)])],
        };
        assert_eq!(sanitize_tracks(&set, &refs, 8.0, 2), set);
    }
}
