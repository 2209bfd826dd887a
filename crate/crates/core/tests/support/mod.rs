//! Fixtures and independent reference implementations shared by the
//! integration suites and the acceptance gate. Every `check_*` function
//! returns `Err(reason)` instead of panicking so callers can either assert or
//! report.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eventgraph_core::cluster::{dbscan, search_eps, NOISE};
use eventgraph_core::config::PipelineConfig;
use eventgraph_core::descriptors::Question;
use eventgraph_core::graph::{EntityNode, KnowledgeGraph, NodeType, Provenance, RelationEdge, IN_COUNTRY};
use eventgraph_core::index::{execute_query, InvertedIndex, QueryAst, QueryField, SearchResult};
use eventgraph_core::ingest::{Document, SourceType};
use eventgraph_core::pca::pca_fit;
use eventgraph_core::pipeline::{self, Feed};
use eventgraph_core::relation::{EntityType, NamedEntity, RelationTriple};
use eventgraph_core::resources::{GeoGazetteer, GeoRow};
use eventgraph_core::store::Store;
use eventgraph_core::text::tokenize;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fixture_now() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 25, 0, 0, 0).unwrap()
}

// ---------------------------------------------------------------- PCA

pub fn random_matrix(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|j| rng.gen_range(-1.0..1.0) * (1.0 + j as f64)).collect())
        .collect()
}

pub struct OraclePca {
    pub mean: Vec<f64>,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Dense eigendecomposition of the sample covariance through nalgebra.
pub fn oracle_pca(rows: &[Vec<f64>]) -> OraclePca {
    let n = rows.len();
    let d = rows[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let pivot = (0..d).fold(0, |p, j| if v[j].abs() > v[p].abs() { j } else { p });
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    OraclePca { mean, values, vectors }
}

pub fn check_pca_oracle() -> Check {
    let started = Instant::now();
    let rows = random_matrix(42, 50, 10);
    let oracle = oracle_pca(&rows);
    let total: f64 = oracle.values.iter().sum();
    let mut previous = 0.0;
    for k in 1..=10 {
        let model = pca_fit(&rows, k).map_err(|e| e.to_string())?;
        let expected: f64 = oracle.values[..k].iter().sum::<f64>() / total;
        ensure!(
            (model.explained_variance_ratio - expected).abs() <= 1e-9,
            "k={k}: ratio {} vs oracle {expected}",
            model.explained_variance_ratio
        );
        ensure!(model.explained_variance_ratio + 1e-12 >= previous, "ratio decreased at k={k}");
        previous = model.explained_variance_ratio;
        for row in &rows {
            let got = model.transform(row).map_err(|e| e.to_string())?;
            for (c, g) in got.iter().enumerate() {
                let want: f64 = oracle.vectors[c].iter().zip(row).zip(&oracle.mean).map(|((v, x), m)| v * (x - m)).sum();
                ensure!((g - want).abs() <= 1e-9, "k={k} component {c}: projection {g} vs oracle {want}");
            }
        }
        if k == 10 {
            ensure!((model.explained_variance_ratio - 1.0).abs() <= 1e-9, "ratio at full rank is {}", model.explained_variance_ratio);
        }
    }
    ensure!(started.elapsed() < Duration::from_secs(1), "took {:?}", started.elapsed());
    Ok(())
}

// ---------------------------------------------------------------- DBSCAN

pub type Points = BTreeMap<String, Vec<f64>>;

/// `n` points around the first `blobs` coordinate axes of R^3, each
/// coordinate jittered uniformly by at most `jitter`.
pub fn blob_fixture(seed: u64, n: usize, blobs: usize, jitter: f64) -> Points {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let v = (0..3)
                .map(|axis| if axis == i % blobs { 1.0 } else { 0.0 } + rng.gen_range(-jitter..jitter))
                .collect();
            (format!("p{i:03}"), v)
        })
        .collect()
}

pub fn uniform_fixture(seed: u64, n: usize, d: usize) -> Points {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| (format!("p{i:03}"), (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

fn oracle_cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    1.0 - dot / (nu * nv)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Quadratic reference: core points are unioned when within `eps`, clusters
/// are numbered by their smallest core index, and a border point takes the
/// smallest cluster number among its core neighbours.
pub fn naive_dbscan(points: &Points, eps: f64, min_pts: usize) -> BTreeMap<String, i32> {
    let ids: Vec<&String> = points.keys().collect();
    let vs: Vec<&Vec<f64>> = points.values().collect();
    let n = ids.len();
    let near: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i == j || oracle_cosine(vs[i], vs[j]) <= eps).collect())
        .collect();
    let core: Vec<bool> = near.iter().map(|row| row.iter().filter(|&&b| b).count() >= min_pts).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if core[i] && core[j] && near[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut number: BTreeMap<usize, i32> = BTreeMap::new();
    let mut core_label = vec![NOISE; n];
    for i in (0..n).filter(|&i| core[i]) {
        let root = find(&mut parent, i);
        let next = number.len() as i32;
        core_label[i] = *number.entry(root).or_insert(next);
    }
    (0..n)
        .map(|i| {
            let label = if core[i] {
                core_label[i]
            } else {
                (0..n).filter(|&j| core[j] && near[i][j]).map(|j| core_label[j]).min().unwrap_or(NOISE)
            };
            (ids[i].clone(), label)
        })
        .collect()
}

pub fn cluster_count(labels: &BTreeMap<String, i32>) -> usize {
    labels.values().filter(|&&l| l >= 0).collect::<BTreeSet<_>>().len()
}

fn labels_of(points: &Points, eps: f64, min_pts: usize) -> BTreeMap<String, i32> {
    dbscan(points, eps, min_pts).into_iter().map(|l| (l.doc_id, l.label)).collect()
}

/// Two labelings describe the same partition with the same noise set.
pub fn same_partition(a: &BTreeMap<String, i32>, b: &BTreeMap<String, i32>) -> bool {
    let mut forward = BTreeMap::new();
    let mut backward = BTreeMap::new();
    a.len() == b.len()
        && a.iter().all(|(id, &la)| {
            let Some(&lb) = b.get(id) else { return false };
            if (la == NOISE) != (lb == NOISE) {
                return false;
            }
            la == NOISE || (*forward.entry(la).or_insert(lb) == lb && *backward.entry(lb).or_insert(la) == la)
        })
}

pub fn dbscan_fixtures() -> Vec<(&'static str, Points)> {
    vec![
        ("two-blob", blob_fixture(1, 200, 2, 0.05)),
        ("three-blob", blob_fixture(2, 200, 3, 0.05)),
        ("uniform", uniform_fixture(3, 200, 4)),
    ]
}

pub fn check_dbscan_oracle() -> Check {
    let started = Instant::now();
    for (name, points) in dbscan_fixtures() {
        let scaled: Points = points.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| x * 7.0).collect())).collect();
        for eps in [0.005, 0.02, 0.05, 0.1, 0.2, 0.3] {
            for min_pts in [1, 3, 5] {
                let got = labels_of(&points, eps, min_pts);
                let want = naive_dbscan(&points, eps, min_pts);
                ensure!(same_partition(&got, &want), "{name} eps={eps} min_pts={min_pts}: partition differs from reference");
                ensure!(got == want, "{name} eps={eps} min_pts={min_pts}: labels not numbered in doc-id order");
                ensure!(labels_of(&scaled, eps, min_pts) == got, "{name} eps={eps} min_pts={min_pts}: scaling by 7 changed labels");
            }
        }
    }
    ensure!(started.elapsed() < Duration::from_secs(5), "took {:?}", started.elapsed());
    Ok(())
}

pub fn check_eps_search() -> Check {
    let cfg = PipelineConfig::default();
    let grid = cfg.eps_grid();
    let points = blob_fixture(2, 200, 3, 0.05);
    let best = search_eps(&points, &grid, cfg.dbscan_min_pts).map_err(|e| e.to_string())?;
    ensure!(best.clusters == 3, "three-blob fixture gave {} clusters at eps {}", best.clusters, best.eps);
    let oracle_max = grid.iter().map(|&e| cluster_count(&naive_dbscan(&points, e, cfg.dbscan_min_pts))).max().unwrap();
    ensure!(oracle_max == 3, "reference maximum over the grid is {oracle_max}");
    let first = grid.iter().position(|&e| cluster_count(&naive_dbscan(&points, e, cfg.dbscan_min_pts)) == oracle_max).unwrap();
    ensure!(best.eps == grid[first], "chose eps {} but the first maximising grid value is {}", best.eps, grid[first]);

    let identical: Points = (0..10).map(|i| (format!("d{i}"), vec![0.3, 0.4, 0.5])).collect();
    let r = search_eps(&identical, &grid, 2).map_err(|e| e.to_string())?;
    ensure!(r.clusters == 1 && r.eps == grid[0], "identical vectors: {} clusters at eps {}", r.clusters, r.eps);

    let isolated: Points = (0..10)
        .map(|i| (format!("d{i}"), (0..10).map(|j| if i == j { 1.0 } else { 0.0 }).collect()))
        .collect();
    let r = search_eps(&isolated, &grid, 2).map_err(|e| e.to_string())?;
    ensure!(r.clusters == 0 && r.eps == grid[0], "isolated vectors: {} clusters at eps {}", r.clusters, r.eps);
    Ok(())
}

// ---------------------------------------------------------------- graph

pub fn prov(doc_id: &str) -> Provenance {
    Provenance {
        doc_id: doc_id.to_string(),
        cluster_id: "news-2020-01-23-0".to_string(),
        published_at: Utc.with_ymd_and_hms(2020, 1, 23, 0, 0, 0).unwrap(),
        source_type: SourceType::News,
    }
}

pub fn geo_fixture() -> GeoGazetteer {
    let row = |name: &str, country: &str, population| GeoRow {
        name: name.into(),
        country: country.into(),
        population,
    };
    GeoGazetteer::from_rows([
        row("Wuhan", "China", 11_081_000),
        row("China", "China", 1_400_000_000),
        row("Springfield", "Australia", 20_000),
        row("Springfield", "United States", 167_000),
    ])
}

fn entity(text: &str, entity_type: EntityType) -> NamedEntity {
    NamedEntity {
        text: text.into(),
        entity_type,
        char_span: (0, text.len()),
    }
}

pub fn triple(subject: (&str, EntityType), relation: &str, object: (&str, EntityType), doc_id: &str) -> RelationTriple {
    RelationTriple {
        subject: subject.0.into(),
        relation: relation.into(),
        object: object.0.into(),
        doc_id: doc_id.into(),
        sentence_index: 0,
        subject_entity: Some(entity(subject.0, subject.1)),
        object_entity: Some(entity(object.0, object.1)),
    }
}

pub fn check_disambiguation() -> Check {
    let geo = geo_fixture();

    let mut g = KnowledgeGraph::new();
    let donald = g.disambiguate_name("Donald Trump", NodeType::Person);
    ensure!(g.disambiguate_name("Trump", NodeType::Person) == donald, "Trump did not merge into Donald Trump");
    ensure!(g.node(donald).unwrap().aliases.contains("trump"), "alias trump missing");
    ensure!(g.node_count() == 1, "merge created a node");
    ensure!(g.disambiguate_name("Trump", NodeType::Org) != donald, "merged across types");

    let mut g = KnowledgeGraph::new();
    let a = g.disambiguate_name("Donald Trump", NodeType::Person);
    let b = g.disambiguate_name("Ivanka Trump", NodeType::Person);
    let t = g.disambiguate_name("Trump", NodeType::Person);
    ensure!(t != a && t != b && g.node_count() == 3, "ambiguous surname was merged");

    let mut g = KnowledgeGraph::new();
    let j = g.disambiguate_name("Johnson", NodeType::Person);
    ensure!(g.disambiguate_name("Boris Johnson", NodeType::Person) == j, "Boris Johnson did not promote Johnson");
    let node = g.node(j).unwrap();
    ensure!(node.name == "Boris Johnson", "promoted name is {}", node.name);
    ensure!(node.aliases.contains("johnson"), "old name not kept as alias");

    let mut g = KnowledgeGraph::new();
    let wuhan = g.disambiguate_name("Wuhan", NodeType::Location);
    let edge = g.link_geo(wuhan, &geo, &prov("d1")).ok_or("Wuhan not linked")?;
    let e = g.edge(edge).unwrap();
    let country = g.node(e.dst).unwrap();
    ensure!(e.relation == IN_COUNTRY && e.src == wuhan, "unexpected link edge {e:?}");
    ensure!(country.name == "China" && country.node_type == NodeType::Country, "linked to {country:?}");
    let atlantis = g.disambiguate_name("Atlantis", NodeType::Location);
    ensure!(g.link_geo(atlantis, &geo, &prov("d1")).is_none(), "Atlantis linked");
    let springfield = g.disambiguate_name("Springfield", NodeType::Location);
    let e = g.link_geo(springfield, &geo, &prov("d1")).ok_or("Springfield not linked")?;
    ensure!(g.node(g.edge(e).unwrap().dst).unwrap().name == "United States", "Springfield not resolved by population");

    let shipped = eventgraph_core::resources::Resources::load(&data_dir().join("resources")).map_err(|e| e.to_string())?;
    ensure!(
        shipped.geo.lookup("wuhan").map(|r| r.country.as_str()) == Some("China"),
        "shipped gazetteer does not map Wuhan to China"
    );

    let mut g = KnowledgeGraph::new();
    let donald = g.disambiguate_name("Donald Trump", NodeType::Person);
    let t = triple(("Trump", EntityType::Person), "criticize", ("Wuhan", EntityType::Location), "d1");
    let (first, created) = g.upsert_triple(&t, &prov("d1"), &geo);
    ensure!(created, "new triple not created");
    ensure!(g.edge(first).unwrap().src == donald, "subject did not resolve to the existing person");
    let edges = g.edge_count();
    let (second, created) = g.upsert_triple(&t, &prov("d2"), &geo);
    ensure!(!created && second == first, "duplicate triple created a new edge");
    ensure!(g.edge_count() == edges, "edge count grew on duplicate upsert");
    ensure!(g.edge(first).unwrap().provenance.len() == 2, "provenance length {}", g.edge(first).unwrap().provenance.len());
    g.upsert_triple(&t, &prov("d2"), &geo);
    ensure!(g.edge(first).unwrap().provenance.len() == 2, "repeated provenance was appended");
    Ok(())
}

// ---------------------------------------------------------------- query engine

fn doc(id: &str, source_type: SourceType, title: &str, body: &str) -> Document {
    let t = Utc.with_ymd_and_hms(2020, 1, 23, 0, 0, 0).unwrap();
    Document {
        id: id.into(),
        source_type,
        source_name: "fixture".into(),
        url: String::new(),
        title: title.into(),
        body: body.into(),
        published_at: t,
        fetched_at: t,
    }
}

fn node(node_id: u64, name: &str, node_type: NodeType, aliases: &[&str]) -> EntityNode {
    EntityNode {
        node_id,
        name: name.into(),
        node_type,
        aliases: aliases.iter().map(|a| a.to_string()).collect(),
        props: BTreeMap::new(),
    }
}

fn edge(edge_id: u64, src: u64, relation: &str, dst: u64) -> RelationEdge {
    RelationEdge {
        edge_id,
        src,
        dst,
        relation: relation.into(),
        provenance: vec![prov("q1")],
    }
}

pub struct QueryFixture {
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<RelationEdge>,
    pub docs: Vec<Document>,
}

impl QueryFixture {
    pub fn index(&self) -> InvertedIndex {
        InvertedIndex::build(&self.nodes, &self.edges, &self.docs)
    }
}

pub fn query_fixture() -> QueryFixture {
    use NodeType::*;
    use SourceType::*;
    QueryFixture {
        nodes: vec![
            node(1, "Wuhan", Location, &[]),
            node(2, "China", Country, &[]),
            node(3, "Singapore", Location, &[]),
            node(4, "World Health Organization", Org, &["who"]),
            node(5, "Donald Trump", Person, &["trump"]),
            node(6, "Gan Kim Yong", Person, &[]),
        ],
        edges: vec![
            edge(1, 1, "in_country", 2),
            edge(2, 5, "criticize", 2),
            edge(3, 4, "send team to", 1),
            edge(4, 6, "confirm case in", 3),
        ],
        docs: vec![
            doc("q1", News, "Wuhan under lockdown", "Authorities in Wuhan suspend buses and trains. Residents of Wuhan stay home."),
            doc("q2", News, "World Health Organization convenes emergency meeting", "The World Health Organization will decide whether the outbreak is a global health emergency."),
            doc("q3", Social, "Singapore confirms first case", "Health minister Gan Kim Yong said a traveller from Wuhan tested positive in Singapore."),
            doc("q4", Social, "Stay safe everyone", "Wearing masks in Singapore today. Health first, stay home if unwell."),
            doc("q5", News, "Trump criticizes China", "Donald Trump said China must be transparent about the virus. Markets fell in China."),
        ],
    }
}

pub const FIXTURE_QUERIES: [&str; 20] = [
    "wuhan",
    "wuhn~1",
    "\"world health organization\"",
    "\"world health organization\" wuhn~1",
    "who AND (china OR singapore)",
    "singapore OR china",
    "health AND NOT singapore",
    "title:wuhan",
    "body:wuhan",
    "entity:trump",
    "type:PERSON",
    "type:LOCATION wuhan",
    "source:social health",
    "\"gan kim yong\"",
    "trump OR \"donald trump\"",
    "(wuhan OR singapore) AND NOT source:news",
    "helth~1",
    "entity_name:\"health organization\"",
    "\"stay home\" OR emergency",
    "china AND (trump OR markets)",
];

/// Levenshtein distance by the textbook dynamic programme over chars.
pub fn oracle_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Text {
    Entity,
    Title,
    Body,
}

/// Scans raw token lists instead of postings.
pub struct ScanOracle {
    /// item key -> field -> token sequences
    items: BTreeMap<String, BTreeMap<Text, Vec<Vec<String>>>>,
    node_types: BTreeMap<String, NodeType>,
    doc_sources: BTreeMap<String, SourceType>,
    edges: Vec<(u64, u64, u64)>,
    totals: BTreeMap<Text, usize>,
    max_edits: usize,
}

type Scores = BTreeMap<String, f64>;

impl ScanOracle {
    pub fn new(fixture: &QueryFixture, max_edits: usize) -> Self {
        let mut items = BTreeMap::new();
        let mut node_types = BTreeMap::new();
        let mut doc_sources = BTreeMap::new();
        for n in &fixture.nodes {
            let key = format!("node:{}", n.node_id);
            let variants = std::iter::once(&n.name).chain(&n.aliases).map(|s| tokenize(s)).collect();
            items.insert(key.clone(), BTreeMap::from([(Text::Entity, variants)]));
            node_types.insert(key, n.node_type);
        }
        for d in &fixture.docs {
            let key = format!("doc:{}", d.id);
            items.insert(
                key.clone(),
                BTreeMap::from([(Text::Title, vec![tokenize(&d.title)]), (Text::Body, vec![tokenize(&d.body)])]),
            );
            doc_sources.insert(key, d.source_type);
        }
        let totals = BTreeMap::from([
            (Text::Entity, fixture.nodes.len()),
            (Text::Title, fixture.docs.len()),
            (Text::Body, fixture.docs.len()),
        ]);
        let edges = fixture.edges.iter().map(|e| (e.edge_id, e.src, e.dst)).collect();
        Self { items, node_types, doc_sources, edges, totals, max_edits }
    }

    fn idf(&self, field: Text, token: &str) -> Option<f64> {
        let df = self
            .items
            .values()
            .filter(|f| f.get(&field).is_some_and(|seqs| seqs.iter().flatten().any(|t| t == token)))
            .count();
        (df > 0).then(|| (1.0 + self.totals[&field] as f64 / df as f64).ln())
    }

    fn fields(scope: Option<QueryField>) -> Vec<Text> {
        match scope {
            None => vec![Text::Entity, Text::Title, Text::Body],
            Some(QueryField::EntityName) => vec![Text::Entity],
            Some(QueryField::DocTitle) => vec![Text::Title],
            Some(QueryField::DocBody) => vec![Text::Body],
            Some(_) => vec![],
        }
    }

    fn eval(&self, ast: &QueryAst, scope: Option<QueryField>) -> Scores {
        let mut out = Scores::new();
        match ast {
            QueryAst::Term { token, fuzzy } => {
                if scope == Some(QueryField::Type) {
                    for (k, t) in &self.node_types {
                        if t.as_str().eq_ignore_ascii_case(token) {
                            out.insert(k.clone(), 0.0);
                        }
                    }
                    return out;
                }
                if scope == Some(QueryField::Source) {
                    for (k, s) in &self.doc_sources {
                        if s.as_str().eq_ignore_ascii_case(token) {
                            out.insert(k.clone(), 0.0);
                        }
                    }
                    return out;
                }
                let limit = if *fuzzy { self.max_edits } else { 0 };
                for field in Self::fields(scope) {
                    for (key, fields) in &self.items {
                        let Some(seqs) = fields.get(&field) else { continue };
                        let mut score = 0.0;
                        let mut hit = false;
                        for tok in seqs.iter().flatten() {
                            if oracle_levenshtein(tok, token) <= limit {
                                score += self.idf(field, tok).unwrap();
                                hit = true;
                            }
                        }
                        if hit {
                            *out.entry(key.clone()).or_default() += score;
                        }
                    }
                }
            }
            QueryAst::Phrase { tokens } => {
                for field in Self::fields(scope) {
                    let Some(weight) = tokens.iter().map(|t| self.idf(field, t)).sum::<Option<f64>>() else { continue };
                    for (key, fields) in &self.items {
                        let Some(seqs) = fields.get(&field) else { continue };
                        let count: usize = seqs.iter().map(|s| s.windows(tokens.len()).filter(|w| *w == tokens.as_slice()).count()).sum();
                        if count > 0 {
                            *out.entry(key.clone()).or_default() += count as f64 * weight;
                        }
                    }
                }
            }
            QueryAst::Field { field, query } => return self.eval(query, Some(*field)),
            QueryAst::Or { children } => {
                for c in children {
                    for (k, s) in self.eval(c, scope) {
                        *out.entry(k).or_default() += s;
                    }
                }
            }
            QueryAst::And { children } => {
                let positives: Vec<Scores> = children
                    .iter()
                    .filter(|c| !matches!(c, QueryAst::Not { .. }))
                    .map(|c| self.eval(c, scope))
                    .collect();
                let negatives: Vec<Scores> = children
                    .iter()
                    .filter_map(|c| match c {
                        QueryAst::Not { query } => Some(self.eval(query, scope)),
                        _ => None,
                    })
                    .collect();
                let Some(first) = positives.first() else { return out };
                for k in first.keys() {
                    if positives.iter().all(|p| p.contains_key(k)) && negatives.iter().all(|n| !n.contains_key(k)) {
                        out.insert(k.clone(), positives.iter().map(|p| p[k]).sum());
                    }
                }
            }
            QueryAst::Not { .. } => {}
        }
        out
    }

    pub fn run(&self, ast: &QueryAst) -> SearchResult {
        let scores = self.eval(ast, None);
        let mut edge_scores = Scores::new();
        for &(id, src, dst) in &self.edges {
            let mut s = None;
            for endpoint in [src, dst] {
                if let Some(v) = scores.get(&format!("node:{endpoint}")) {
                    *s.get_or_insert(0.0) += v;
                }
            }
            if let Some(v) = s {
                edge_scores.insert(format!("edge:{id}"), v);
            }
        }
        fn rank<T: Ord + Clone>(items: Vec<(T, f64)>) -> Vec<T> {
            let mut items = items;
            items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            items.into_iter().map(|(k, _)| k).collect()
        }
        let pick = |prefix: &str| {
            scores
                .iter()
                .filter_map(|(k, s)| k.strip_prefix(prefix).map(|id| (id.to_string(), *s)))
                .collect::<Vec<_>>()
        };
        let node_ids = rank(pick("node:").into_iter().map(|(id, s)| (id.parse::<u64>().unwrap(), s)).collect());
        let doc_ids = rank(pick("doc:"));
        let edge_ids = rank(
            edge_scores
                .iter()
                .map(|(k, s)| (k.strip_prefix("edge:").unwrap().parse::<u64>().unwrap(), *s))
                .collect(),
        );
        let mut all = scores;
        all.extend(edge_scores);
        SearchResult { node_ids, edge_ids, doc_ids, scores: all }
    }
}

pub fn same_result(got: &SearchResult, want: &SearchResult) -> Check {
    ensure!(got.node_ids == want.node_ids, "node ids {:?} vs oracle {:?}", got.node_ids, want.node_ids);
    ensure!(got.edge_ids == want.edge_ids, "edge ids {:?} vs oracle {:?}", got.edge_ids, want.edge_ids);
    ensure!(got.doc_ids == want.doc_ids, "doc ids {:?} vs oracle {:?}", got.doc_ids, want.doc_ids);
    ensure!(
        got.scores.keys().eq(want.scores.keys()),
        "score keys {:?} vs oracle {:?}",
        got.scores.keys().collect::<Vec<_>>(),
        want.scores.keys().collect::<Vec<_>>()
    );
    for (k, v) in &got.scores {
        ensure!((v - want.scores[k]).abs() <= 1e-9, "score of {k}: {v} vs oracle {}", want.scores[k]);
    }
    Ok(())
}

fn id_set(r: &SearchResult) -> BTreeSet<String> {
    r.node_ids
        .iter()
        .map(|id| format!("node:{id}"))
        .chain(r.doc_ids.iter().map(|id| format!("doc:{id}")))
        .collect()
}

pub fn check_query_oracle() -> Check {
    use eventgraph_core::index::parse_query;
    let fixture = query_fixture();
    let index = fixture.index();
    let max_edits = PipelineConfig::default().fuzzy_max_edits;
    let oracle = ScanOracle::new(&fixture, max_edits);
    let mut asts = Vec::new();
    for q in FIXTURE_QUERIES {
        let ast = parse_query(q).map_err(|e| format!("{q}: {e}"))?;
        same_result(&execute_query(&index, &ast, max_edits), &oracle.run(&ast)).map_err(|e| format!("{q}: {e}"))?;
        asts.push(ast);
    }

    let wuhan = execute_query(&index, &QueryAst::term("wuhan"), max_edits);
    ensure!(wuhan.node_ids == [1] && wuhan.doc_ids.len() == 2, "wuhan gave nodes {:?} docs {:?}", wuhan.node_ids, wuhan.doc_ids);
    let fuzzy = execute_query(&index, &QueryAst::fuzzy("wuhn"), max_edits);
    ensure!(fuzzy.node_ids.contains(&1), "wuhn~1 did not reach wuhan");

    for a in &asts {
        for b in &asts {
            let (ra, rb) = (id_set(&execute_query(&index, a, max_edits)), id_set(&execute_query(&index, b, max_edits)));
            let and = id_set(&execute_query(&index, &QueryAst::and(vec![a.clone(), b.clone()]), max_edits));
            ensure!(and == &ra & &rb, "AND is not intersection for {a} / {b}");
            let or = id_set(&execute_query(&index, &QueryAst::or(vec![a.clone(), b.clone()]), max_edits));
            ensure!(or == &ra | &rb, "OR is not union for {a} / {b}");
            let not = id_set(&execute_query(&index, &QueryAst::and(vec![a.clone(), QueryAst::not(b.clone())]), max_edits));
            ensure!(not == &ra - &rb, "AND NOT is not difference for {a} / {b}");
        }
    }

    for tok in ["wuhan", "wuhn", "helth", "health", "china", "trump"] {
        let exact = execute_query(&index, &QueryAst::term(tok), 0);
        ensure!(execute_query(&index, &QueryAst::fuzzy(tok), 0) == exact, "fuzzy with zero edits differs for {tok}");
    }
    Ok(())
}

// ---------------------------------------------------------------- fixture pipeline

pub fn fixture_feed() -> Feed {
    let xml = std::fs::read_to_string(data_dir().join("feeds/sample.xml")).expect("fixture feed");
    Feed { source_name: "sample".into(), xml }
}

/// Runs every pipeline stage over the shipped corpus into `dir`.
pub fn build_fixture_store(dir: &Path) -> Result<Store, String> {
    let cfg = PipelineConfig::default();
    let store = Store::new(dir);
    let data = data_dir();
    let corpus = [data.join("corpus/news.jsonl"), data.join("corpus/social.jsonl")];
    let files: Vec<&Path> = corpus.iter().map(PathBuf::as_path).collect();
    let err = |e: pipeline::PipelineError| e.to_string();
    pipeline::ingest(&store, &files, &[fixture_feed()], fixture_now()).map_err(err)?;
    pipeline::prepare(&store, &data.join("resources"), &cfg).map_err(err)?;
    pipeline::cluster(&store, &cfg).map_err(err)?;
    pipeline::extract(&store, &cfg).map_err(err)?;
    pipeline::graph_build(&store).map_err(err)?;
    pipeline::index(&store).map_err(err)?;
    Ok(store)
}

pub fn check_descriptor_bounds(store: &Store) -> Check {
    let top_k = PipelineConfig::default().top_k_descriptors;
    let clusters = store.load_clusters().map_err(|e| e.to_string())?;
    ensure!(!clusters.is_empty(), "fixture store has no clusters");
    for c in &clusters {
        let set = c.w5h1.as_ref().ok_or_else(|| format!("{} has no descriptors", c.cluster_id))?;
        for q in Question::ALL {
            ensure!(set.get(q).len() <= top_k, "{} {q:?}: {} descriptors", c.cluster_id, set.get(q).len());
        }
        ensure!(!set.get(Question::When).is_empty(), "{} has no when descriptor", c.cluster_id);
    }
    Ok(())
}
