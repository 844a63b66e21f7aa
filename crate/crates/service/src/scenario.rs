//! Scenarios: the explainer's knowledge, the knowledge the human is assumed
//! to start from, the decisions to discuss, and display labels.

use std::collections::BTreeMap;
use std::sync::Arc;

use drhai_core::{parse_formula, Formula, KnowledgeBase, Protocol};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ServiceError;

/// Scenario as uploaded: formulas in text form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub kb_r: Vec<String>,
    pub menu_kb: Vec<String>,
    pub topic: Vec<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub spec: ScenarioSpec,
    pub kb_r: Arc<KnowledgeBase>,
    pub menu_kb: Arc<KnowledgeBase>,
    pub topic: Vec<Formula>,
    labels: BTreeMap<Formula, String>,
}

fn parse_kb(label: &str, lines: &[String]) -> Result<KnowledgeBase, ServiceError> {
    let mut kb = KnowledgeBase::new(label);
    for (i, line) in lines.iter().enumerate() {
        let f = parse_formula(line).map_err(|e| ServiceError::InvalidScenario(format!("{label}[{i}] '{line}': {e}")))?;
        kb.try_push(f)
            .map_err(|e| ServiceError::InvalidScenario(format!("{label}[{i}]: {e}")))?;
    }
    Ok(kb)
}

impl Scenario {
    /// Parses and checks a scenario: both knowledge bases consistent, every
    /// topic formula entailed by `kb_r` and open for the human to query.
    pub fn new(id: impl Into<String>, spec: ScenarioSpec) -> Result<Self, ServiceError> {
        if spec.title.trim().is_empty() {
            return Err(ServiceError::InvalidScenario("title is empty".into()));
        }
        let kb_r = parse_kb("kb_r", &spec.kb_r)?;
        let menu_kb = parse_kb("menu_kb", &spec.menu_kb)?;
        let topic = spec
            .topic
            .iter()
            .map(|t| parse_formula(t).map_err(|e| ServiceError::InvalidScenario(format!("topic '{t}': {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut labels = BTreeMap::new();
        for (k, v) in &spec.labels {
            let f = parse_formula(k).map_err(|e| ServiceError::InvalidScenario(format!("label key '{k}': {e}")))?;
            labels.insert(f, v.clone());
        }
        Protocol::default()
            .check_topic(&kb_r, &menu_kb, &topic)
            .map_err(|e| ServiceError::InvalidScenario(e.to_string()))?;
        Ok(Scenario {
            id: id.into(),
            spec,
            kb_r: Arc::new(kb_r),
            menu_kb: Arc::new(menu_kb),
            topic,
            labels,
        })
    }

    /// Content-derived identifier for an uploaded scenario.
    pub fn derived_id(spec: &ScenarioSpec) -> String {
        let bytes = serde_json::to_vec(spec).expect("scenario specs serialize");
        let digest = Sha256::digest(&bytes);
        format!("s-{}", &hex::encode(digest)[..12])
    }

    /// Display text for `f`: its label, `not <label>` for a negated labelled
    /// formula, otherwise formula syntax.
    pub fn render(&self, f: &Formula) -> String {
        if let Some(text) = self.labels.get(f) {
            return text.clone();
        }
        if let Formula::Not(inner) = f {
            if let Some(text) = self.labels.get(inner.as_ref()) {
                return format!("not: {text}");
            }
        }
        f.to_string()
    }

    pub fn render_all<'a>(&self, fs: impl IntoIterator<Item = &'a Formula>) -> String {
        fs.into_iter().map(|f| self.render(f)).collect::<Vec<_>>().join("; ")
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

fn labels(items: &[(&str, &str)]) -> BTreeMap<String, String> {
    items.iter().map(|(k, v)| ((*k).to_owned(), (*v).to_owned())).collect()
}

/// The scenarios every service starts with.
pub fn builtin() -> Vec<Scenario> {
    let illustrative = ScenarioSpec {
        title: "Illustrative example".into(),
        description: "Why does the explainer conclude c? Seven formulas against four.".into(),
        kb_r: strings(&["a", "b", "a & b -> c", "h", "h -> !e", "f", "f -> h"]),
        menu_kb: strings(&["e", "e -> !c", "i", "i -> !f"]),
        topic: strings(&["c"]),
        labels: BTreeMap::new(),
    };
    let roomie = ScenarioSpec {
        title: "Roomie is offline".into(),
        description: "The home robot Roomie reports that it is disconnected from the internet. \
                      Find out why it thinks so."
            .into(),
        kb_r: strings(&[
            "light_flashing",
            "light_flashing -> battery_low",
            "battery_low -> !wifi_up",
            "license_expired",
            "license_expired -> !wired_up",
            "!wifi_up & !wired_up -> disconnected",
            "app_outdated",
            "app_outdated -> !app_reliable",
        ]),
        menu_kb: strings(&[
            "app_reliable",
            "app_shows_online",
            "app_reliable & app_shows_online -> !disconnected",
            "cable_plugged",
            "cable_plugged -> wired_up",
        ]),
        topic: strings(&["disconnected"]),
        labels: labels(&[
            ("disconnected", "Roomie is disconnected from the internet"),
            ("light_flashing", "the light next to the LAN port is flashing"),
            ("light_flashing -> battery_low", "a flashing light means the battery is low"),
            ("battery_low", "the battery is low"),
            ("battery_low -> !wifi_up", "with a low battery the Wi-Fi radio is switched off"),
            ("wifi_up", "Wi-Fi is up"),
            ("license_expired", "the licence for the wired connection has expired"),
            ("license_expired -> !wired_up", "an expired licence disables the wired connection"),
            ("wired_up", "the wired connection is up"),
            ("!wifi_up & !wired_up -> disconnected", "without Wi-Fi and without a wired link Roomie is offline"),
            ("app_outdated", "the mobile app is outdated"),
            ("app_outdated -> !app_reliable", "an outdated app shows stale status"),
            ("app_reliable", "the mobile app shows the true status"),
            ("app_shows_online", "the mobile app shows Roomie online"),
            ("app_reliable & app_shows_online -> !disconnected", "if the app is right and says online, Roomie is online"),
            ("cable_plugged", "the network cable is plugged in"),
            ("cable_plugged -> wired_up", "a plugged-in cable means the wired link works"),
        ]),
    };
    [("illustrative", illustrative), ("roomie", roomie)]
        .into_iter()
        .map(|(id, spec)| Scenario::new(id, spec).expect("built-in scenarios are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        let all = builtin();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].topic, vec![parse_formula("c").unwrap()]);
    }

    #[test]
    fn rendering_falls_back_to_syntax() {
        let roomie = builtin().pop().unwrap();
        assert_eq!(roomie.render(&parse_formula("battery_low").unwrap()), "the battery is low");
        assert_eq!(roomie.render(&parse_formula("!wifi_up").unwrap()), "not: Wi-Fi is up");
        assert_eq!(roomie.render(&parse_formula("x & y").unwrap()), "x & y");
    }

    #[test]
    fn topic_must_be_open() {
        let spec = ScenarioSpec {
            title: "t".into(),
            description: String::new(),
            kb_r: strings(&["a"]),
            menu_kb: strings(&["a"]),
            topic: strings(&["a"]),
            labels: BTreeMap::new(),
        };
        let err = Scenario::new("x", spec).unwrap_err();
        assert!(matches!(err, ServiceError::InvalidScenario(_)));
    }

    #[test]
    fn derived_ids_depend_on_content() {
        let mut spec = builtin()[0].spec.clone();
        let a = Scenario::derived_id(&spec);
        spec.title.push('!');
        assert_ne!(a, Scenario::derived_id(&spec));
        assert!(a.starts_with("s-"));
    }
}
