//! Density-based clustering under cosine distance, epsilon search and
//! representative selection.

use std::collections::{BTreeMap, VecDeque};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::EventDescriptorSet;
use crate::ingest::SourceType;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,
    #[error("vectors have different lengths")]
    LengthMismatch,
    #[error("epsilon grid is empty or not ascending")]
    BadGrid,
    #[error("cannot select a representative of an empty cluster")]
    EmptyCluster,
}

pub const NOISE: i32 = -1;

pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, ClusterError> {
    if u.len() != v.len() {
        return Err(ClusterError::LengthMismatch);
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(ClusterError::ZeroVector);
    }
    Ok((1.0 - dot(u, v) / (nu * nv)).clamp(0.0, 2.0))
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Dense pairwise cosine distances for points in ascending doc-id order.
/// Pairs involving a zero vector are `+inf`; the diagonal is zero.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    dist: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(points: &BTreeMap<String, Vec<f64>>) -> Self {
        let ids: Vec<String> = points.keys().cloned().collect();
        let n = ids.len();
        let unit: Vec<Option<Vec<f64>>> = points
            .values()
            .map(|v| {
                let len = norm(v);
                (len > 0.0).then(|| v.iter().map(|x| x / len).collect())
            })
            .collect();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = match (&unit[i], &unit[j]) {
                    (Some(a), Some(b)) => (1.0 - dot(a, b)).clamp(0.0, 2.0),
                    _ => f64::INFINITY,
                };
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self { ids, dist }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.ids.len() + j]
    }

    fn neighbors(&self, i: usize, eps: f64) -> Vec<usize> {
        (0..self.len()).filter(|&j| j == i || self.get(i, j) <= eps).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocLabel {
    pub doc_id: String,
    pub label: i32,
}

/// DBSCAN over cosine distance; see [`dbscan_matrix`].
pub fn dbscan(points: &BTreeMap<String, Vec<f64>>, eps: f64, min_pts: usize) -> Vec<DocLabel> {
    dbscan_matrix(&DistanceMatrix::new(points), eps, min_pts)
}

/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps`. Points are visited in ascending doc-id order and clusters are
/// numbered in the order their first core point is reached. A border point
/// joins the first cluster that reaches it.
pub fn dbscan_matrix(matrix: &DistanceMatrix, eps: f64, min_pts: usize) -> Vec<DocLabel> {
    let n = matrix.len();
    let mut labels: Vec<Option<i32>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start].is_some() {
            continue;
        }
        let seeds = matrix.neighbors(start, eps);
        if seeds.len() < min_pts {
            labels[start] = Some(NOISE);
            continue;
        }
        let cluster = next;
        next += 1;
        labels[start] = Some(cluster);
        let mut queue: VecDeque<usize> = seeds.into_iter().filter(|&j| j != start).collect();
        while let Some(p) = queue.pop_front() {
            match labels[p] {
                Some(NOISE) => {
                    labels[p] = Some(cluster);
                    continue;
                }
                Some(_) => continue,
                None => labels[p] = Some(cluster),
            }
            let reach = matrix.neighbors(p, eps);
            if reach.len() >= min_pts {
                queue.extend(reach.into_iter().filter(|&q| matches!(labels[q], None | Some(NOISE))));
            }
        }
    }
    matrix
        .ids
        .iter()
        .zip(labels)
        .map(|(id, l)| DocLabel {
            doc_id: id.clone(),
            label: l.unwrap_or(NOISE),
        })
        .collect()
}

pub fn cluster_count(labels: &[DocLabel]) -> usize {
    let mut distinct: Vec<i32> = labels.iter().map(|l| l.label).filter(|&l| l >= 0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    distinct.len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsSearch {
    pub eps: f64,
    pub clusters: usize,
    pub labels: Vec<DocLabel>,
}

/// Runs DBSCAN at every grid value and keeps the run with the most clusters,
/// preferring the smallest epsilon on ties.
pub fn search_eps(
    points: &BTreeMap<String, Vec<f64>>,
    eps_grid: &[f64],
    min_pts: usize,
) -> Result<EpsSearch, ClusterError> {
    if eps_grid.is_empty() || eps_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ClusterError::BadGrid);
    }
    let matrix = DistanceMatrix::new(points);
    let mut best: Option<EpsSearch> = None;
    for &eps in eps_grid {
        let labels = dbscan_matrix(&matrix, eps, min_pts);
        let clusters = cluster_count(&labels);
        if best.as_ref().is_none_or(|b| clusters > b.clusters) {
            best = Some(EpsSearch { eps, clusters, labels });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// The member closest (cosine) to the centroid, smallest doc id on ties.
pub fn select_representative(members: &BTreeMap<String, Vec<f64>>) -> Result<(String, Vec<f64>), ClusterError> {
    let dims = members.values().next().ok_or(ClusterError::EmptyCluster)?.len();
    let mut centroid = vec![0.0; dims];
    for v in members.values() {
        if v.len() != dims {
            return Err(ClusterError::LengthMismatch);
        }
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    let n = members.len() as f64;
    for c in &mut centroid {
        *c /= n;
    }
    if norm(&centroid) == 0.0 {
        return Err(ClusterError::ZeroVector);
    }
    let mut best: Option<(&String, f64)> = None;
    for (id, v) in members {
        // zero-vector members can never be closest
        let d = cosine_distance(v, &centroid).unwrap_or(f64::INFINITY);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    let (id, _) = best.expect("members is non-empty");
    Ok((id.clone(), centroid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub doc_id: String,
    pub label: i32,
    pub period: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCluster {
    pub cluster_id: String,
    pub period: NaiveDate,
    pub source_type: SourceType,
    pub eps: f64,
    pub member_doc_ids: Vec<String>,
    pub representative_doc_id: String,
    pub centroid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w5h1: Option<EventDescriptorSet>,
}

pub fn cluster_id(source: SourceType, period: NaiveDate, label: i32) -> String {
    format!("{}-{}-{}", source.as_str(), period.format("%Y-%m-%d"), label)
}

/// Clusters one (source, period) group and builds its event clusters.
pub fn cluster_period(
    source: SourceType,
    period: NaiveDate,
    points: &BTreeMap<String, Vec<f64>>,
    eps_grid: &[f64],
    min_pts: usize,
) -> Result<(Vec<ClusterAssignment>, Vec<EventCluster>), ClusterError> {
    if points.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let search = search_eps(points, eps_grid, min_pts)?;
    let assignments = search
        .labels
        .iter()
        .map(|l| ClusterAssignment {
            doc_id: l.doc_id.clone(),
            label: l.label,
            period,
        })
        .collect();

    let mut groups: BTreeMap<i32, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for l in search.labels.iter().filter(|l| l.label >= 0) {
        groups
            .entry(l.label)
            .or_default()
            .insert(l.doc_id.clone(), points[&l.doc_id].clone());
    }
    let mut clusters = Vec::with_capacity(groups.len());
    for (label, members) in groups {
        let (representative, centroid) = select_representative(&members)?;
        clusters.push(EventCluster {
            cluster_id: cluster_id(source, period, label),
            period,
            source_type: source,
            eps: search.eps,
            member_doc_ids: members.keys().cloned().collect(),
            representative_doc_id: representative,
            centroid,
            w5h1: None,
        });
    }
    Ok((assignments, clusters))
}
