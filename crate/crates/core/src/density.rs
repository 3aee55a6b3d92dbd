//! Spatial density of unsafe behaviour.
//!
//! Segment locations are smoothed with a quartic (biweight) kernel on a
//! regular grid, one field per behaviour label. Strict local maxima of a
//! field are its cluster centers; their values convert to the share of
//! passing vehicles through a fixed proportion constant.

use crate::classify::BehaviorLabel;
use crate::error::{Error, Result};
use crate::model::{region_of, Region, WorkZoneLayout};
use crate::par::{self, Execution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const PROPORTION_CONSTANT: f64 = 36.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cell: f64,
    pub bandwidth: f64,
    /// Density corresponding to every passing vehicle (100 %).
    pub proportion_constant: f64,
    /// Smallest density reported as a cluster center.
    pub min_peak: f64,
}

impl Default for DensityGridSpec {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1000.0,
            y_min: -10.0,
            y_max: 25.0,
            cell: 5.0,
            bandwidth: 30.0,
            proportion_constant: PROPORTION_CONSTANT,
            min_peak: 0.1,
        }
    }
}

impl DensityGridSpec {
    /// Grid covering the zone with `upstream` metres before it and `downstream`
    /// metres after it, across all lanes with a 10 m lateral margin.
    pub fn for_layout(layout: &WorkZoneLayout, upstream: f64, downstream: f64) -> Self {
        Self {
            x_min: layout.zone_start_x - upstream,
            x_max: layout.zone_end_x() + downstream,
            y_min: -10.0,
            y_max: layout.lane_count as f64 * layout.lane_width + 10.0,
            ..Self::default()
        }
    }

    pub fn nx(&self) -> usize {
        (((self.x_max - self.x_min) / self.cell) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn ny(&self) -> usize {
        (((self.y_max - self.y_min) / self.cell) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn cell_x(&self, ix: usize) -> f64 {
        self.x_min + (ix as f64 + 0.5) * self.cell
    }

    pub fn cell_y(&self, iy: usize) -> f64 {
        self.y_min + (iy as f64 + 0.5) * self.cell
    }

    pub fn validate(&self, layout: Option<&WorkZoneLayout>) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.cell > 0.0) {
            v.push("cell must be > 0".into());
        }
        if !(self.bandwidth >= self.cell) {
            v.push("bandwidth must be >= cell".into());
        }
        if !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            v.push("grid extent is empty".into());
        }
        if !(self.proportion_constant > 0.0) {
            v.push("proportion_constant must be > 0".into());
        }
        if let Some(l) = layout {
            if self.x_min > l.zone_start_x - 500.0 || self.x_max < l.zone_end_x() {
                v.push("grid must cover the zone and at least 500 m upstream".into());
            }
        }
        v
    }

    /// Per-vehicle point weight under which a field value equals
    /// `proportion_constant` times the share of `vehicles` stacked at one spot.
    pub fn vehicle_weight(&self, vehicles: usize) -> f64 {
        if vehicles == 0 {
            return 0.0;
        }
        self.proportion_constant * PI * self.bandwidth * self.bandwidth / (3.0 * vehicles as f64)
    }

    fn same_grid(&self, other: &DensityGridSpec) -> bool {
        self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.y_min == other.y_min
            && self.y_max == other.y_max
            && self.cell == other.cell
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl WeightedPoint {
    pub fn unit(x: f64, y: f64) -> Self {
        Self { x, y, w: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub spec: DensityGridSpec,
    pub label: BehaviorLabel,
    /// Row-major, `ny` rows of `nx` cells, row 0 at `y_min`.
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(spec: DensityGridSpec, label: BehaviorLabel) -> Self {
        Self {
            spec,
            label,
            values: vec![0.0; spec.nx() * spec.ny()],
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx() + ix]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Quartic kernel `K(u) = 3/pi (1 - u^2)^2` on `u < 1`.
pub fn quartic(u2: f64) -> f64 {
    if u2 < 1.0 {
        let s = 1.0 - u2;
        3.0 / PI * s * s
    } else {
        0.0
    }
}

/// Kernel density on the grid. Rows are computed independently; each point
/// only touches cells within one bandwidth.
pub fn kde(points: &[WeightedPoint], spec: &DensityGridSpec, label: BehaviorLabel, exec: Execution) -> DensityField {
    let mut field = DensityField::zeros(*spec, label);
    let (nx, h) = (spec.nx(), spec.bandwidth);
    let h2 = h * h;
    par::for_each_chunk_mut(exec, &mut field.values, nx, |iy, row| {
        let yc = spec.cell_y(iy);
        for p in points {
            let dy = yc - p.y;
            if dy.abs() >= h {
                continue;
            }
            let lo = ((p.x - h - spec.x_min) / spec.cell - 0.5).floor().max(0.0) as usize;
            let hi = (((p.x + h - spec.x_min) / spec.cell - 0.5).ceil().max(-1.0) + 1.0) as usize;
            for (ix, cell) in row.iter_mut().enumerate().take(hi.min(nx)).skip(lo) {
                let dx = spec.cell_x(ix) - p.x;
                let u2 = (dx * dx + dy * dy) / h2;
                if u2 < 1.0 {
                    *cell += p.w * quartic(u2) / h2;
                }
            }
        }
    });
    field
}

pub fn density_to_proportion(density: f64, proportion_constant: f64) -> f64 {
    density / proportion_constant * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterCenter {
    pub label: BehaviorLabel,
    pub x: f64,
    pub y: f64,
    pub density: f64,
    pub proportion: f64,
    pub region: Region,
}

/// Strict 8-neighbourhood maxima at or above `min_peak`, densest first.
pub fn find_cluster_centers(field: &DensityField, layout: &WorkZoneLayout) -> Vec<ClusterCenter> {
    let spec = &field.spec;
    let (nx, ny) = (spec.nx(), spec.ny());
    let mut out = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let d = field.get(ix, iy);
            if !(d >= spec.min_peak) || d <= 0.0 {
                continue;
            }
            let mut strict = true;
            'n: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    if field.get(jx as usize, jy as usize) >= d {
                        strict = false;
                        break 'n;
                    }
                }
            }
            if strict {
                let x = spec.cell_x(ix);
                out.push(ClusterCenter {
                    label: field.label,
                    x,
                    y: spec.cell_y(iy),
                    density: d,
                    proportion: density_to_proportion(d, spec.proportion_constant),
                    region: region_of(x, layout),
                });
            }
        }
    }
    out.sort_by(|a, b| b.density.total_cmp(&a.density).then(a.x.total_cmp(&b.x)));
    out
}

/// Region grouping of the assessment table: everything upstream of the work
/// area, the termination area, and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionGroup {
    UpstreamOfWork,
    Termination,
    Other,
}

impl RegionGroup {
    pub fn of(region: Region) -> Self {
        match region {
            Region::Upstream | Region::Warning | Region::UpstreamTransition | Region::Buffer => {
                RegionGroup::UpstreamOfWork
            }
            Region::Termination => RegionGroup::Termination,
            _ => RegionGroup::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: BehaviorLabel,
    pub group: RegionGroup,
    /// Mean over replications of the largest center density.
    pub density: f64,
    pub proportion: f64,
    /// Replications in which the combination produced a center.
    pub observed_in: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub scenario: Option<String>,
    pub replications: usize,
    pub rows: Vec<ReportRow>,
}

impl AssessmentReport {
    pub fn get(&self, label: BehaviorLabel, group: RegionGroup) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label && r.group == group)
    }

    /// Density of a combination, zero when absent.
    pub fn density(&self, label: BehaviorLabel, group: RegionGroup) -> f64 {
        self.get(label, group).map_or(0.0, |r| r.density)
    }
}

/// Per replication, the maximum center density of each (label, group); then
/// the mean across replications, counting a missing combination as zero.
/// Combinations absent from every replication are omitted.
pub fn build_report(
    replications: &[Vec<DensityField>],
    layout: &WorkZoneLayout,
    scenario: Option<String>,
) -> Result<AssessmentReport> {
    if replications.is_empty() {
        return Err(Error::InvalidConfig(vec!["report needs at least one replication".into()]));
    }
    let reference = replications
        .iter()
        .flatten()
        .next()
        .map(|f| f.spec);
    let mut acc: BTreeMap<(RegionGroup, BehaviorLabel), (f64, usize)> = BTreeMap::new();
    let mut constant = crate::density::PROPORTION_CONSTANT;
    for fields in replications {
        let mut maxima: BTreeMap<(RegionGroup, BehaviorLabel), f64> = BTreeMap::new();
        for field in fields {
            if let Some(r) = &reference {
                if !r.same_grid(&field.spec) {
                    return Err(Error::LayoutMismatch);
                }
            }
            constant = field.spec.proportion_constant;
            for c in find_cluster_centers(field, layout) {
                let e = maxima.entry((RegionGroup::of(c.region), c.label)).or_insert(0.0);
                *e = e.max(c.density);
            }
        }
        for (k, d) in maxima {
            let e = acc.entry(k).or_insert((0.0, 0));
            e.0 += d;
            e.1 += 1;
        }
    }
    let n = replications.len() as f64;
    let rows = acc
        .into_iter()
        .map(|((group, label), (sum, seen))| {
            let density = sum / n;
            ReportRow {
                label,
                group,
                density,
                proportion: density_to_proportion(density, constant),
                observed_in: seen,
            }
        })
        .collect();
    Ok(AssessmentReport {
        scenario,
        replications: replications.len(),
        rows,
    })
}
