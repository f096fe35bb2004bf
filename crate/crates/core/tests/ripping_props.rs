mod common;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use common::rng;
use enftest::ripping::{rip, RipConfig, RipTransition, RippingModel};
use enftest::sut::{fixture, ScreenGraphApp, StateDigest, SutDriver};
use rand::seq::SliceRandom;

fn ripped(name: &str, cfg: &RipConfig) -> RippingModel {
    rip(&mut fixture(name).unwrap().driver(), cfg).unwrap()
}

type Edge = (StateDigest, String, Vec<String>, StateDigest);

/// Every configuration of the fixture reachable by actions, projected onto
/// digests.
fn projected_graph(name: &str) -> (BTreeSet<StateDigest>, BTreeSet<Edge>) {
    let mut start = fixture(name).unwrap().driver();
    start.reset();
    let mut seen: HashSet<ScreenGraphApp> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut states = BTreeSet::new();
    let mut edges = BTreeSet::new();
    while let Some(c) = queue.pop_front() {
        let here = c.digest(&c.observe());
        states.insert(here.clone());
        for a in c.available_actions(&c.observe()) {
            let mut d = c.clone();
            let p = d.perform(&a).unwrap();
            edges.insert((here.clone(), a.to_string(), p.events, d.digest(&p.state)));
            if seen.insert(d.clone()) {
                queue.push_back(d);
            }
        }
    }
    (states, edges)
}

fn edge_set(m: &RippingModel) -> BTreeSet<Edge> {
    m.transitions
        .iter()
        .map(|t| {
            (
                t.from.clone(),
                t.action.to_string(),
                t.events.clone(),
                t.to.clone(),
            )
        })
        .collect()
}

#[test]
fn complete_rip_equals_projected_configuration_graph() {
    for name in ["foocam_c", "foocam_f"] {
        let model = ripped(name, &RipConfig::with_budget(10_000));
        assert!(model.meta.complete);
        let (states, edges) = projected_graph(name);
        let got: BTreeSet<StateDigest> = model.states.iter().map(|s| s.digest.clone()).collect();
        assert_eq!(got, states, "{name}");
        assert_eq!(edge_set(&model), edges, "{name}");
        assert!(model.meta.diagnostics.is_empty());
    }
}

#[test]
fn random_transitions_replay() {
    for name in ["foocam_c", "foocam_f"] {
        let model = ripped(name, &RipConfig::with_budget(750));
        let access = model.access_paths();
        let mut picks: Vec<&RipTransition> = model.transitions.iter().collect();
        picks.shuffle(&mut rng(11));
        for t in picks.iter().cycle().take(20) {
            let mut app = fixture(name).unwrap().driver();
            app.reset();
            for a in &access[&t.from] {
                app.perform(a).unwrap();
            }
            assert_eq!(app.digest(&app.observe()), t.from);
            let p = app.perform(&t.action).unwrap();
            assert_eq!(p.events, t.events);
            assert_eq!(app.digest(&p.state), t.to);
        }
    }
}

fn distances(m: &RippingModel) -> HashMap<StateDigest, usize> {
    let mut dist = HashMap::from([(m.initial.clone(), 0)]);
    let mut queue = VecDeque::from([m.initial.clone()]);
    while let Some(s) = queue.pop_front() {
        for t in m.transitions.iter().filter(|t| t.from == s) {
            if !dist.contains_key(&t.to) {
                dist.insert(t.to.clone(), dist[&s] + 1);
                queue.push_back(t.to.clone());
            }
        }
    }
    dist
}

#[test]
fn states_are_discovered_breadth_first() {
    for seed in [None, Some(1), Some(2), Some(99)] {
        for name in ["foocam_c", "foocam_f"] {
            let cfg = RipConfig {
                seed,
                ..RipConfig::with_budget(750)
            };
            let model = ripped(name, &cfg);
            let dist = distances(&model);
            let order: Vec<usize> = model.states.iter().map(|s| dist[&s.digest]).collect();
            assert!(
                order.windows(2).all(|w| w[0] <= w[1]),
                "{name} {seed:?}: {order:?}"
            );
            for (d, path) in model.access_paths() {
                assert_eq!(path.len(), dist[&d]);
            }
        }
    }
}

#[test]
fn seeds_change_order_not_content() {
    let base = ripped("foocam_f", &RipConfig::with_budget(750));
    for seed in 0..5 {
        let cfg = RipConfig {
            seed: Some(seed),
            ..RipConfig::with_budget(750)
        };
        let a = ripped("foocam_f", &cfg);
        assert_eq!(a, ripped("foocam_f", &cfg));
        assert_eq!(edge_set(&a), edge_set(&base));
    }
}

#[test]
fn partial_rips_are_consistent() {
    let full = edge_set(&ripped("foocam_c", &RipConfig::with_budget(750)));
    for budget in 1..60 {
        let model = ripped("foocam_c", &RipConfig::with_budget(budget));
        assert!(model.meta.actions_executed <= budget);
        assert!(edge_set(&model).is_subset(&full), "budget {budget}");
        model.validate().unwrap();
    }
}
