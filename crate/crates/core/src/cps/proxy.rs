use std::collections::BTreeMap;

use serde::Serialize;

use super::CpsError;
use crate::domain::EpistemicTag;
use crate::perception::PerceptualRepresentation;
use crate::simspace::SimilarityProfile;

/// Representations and profiles a proxy may refer to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepStore {
    reps: BTreeMap<String, PerceptualRepresentation>,
    profiles: BTreeMap<String, SimilarityProfile>,
}

impl RepStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_rep(&mut self, rep: PerceptualRepresentation) {
        self.reps.insert(rep.rep_id.clone(), rep);
    }

    /// Stores `profile` under `profile_id`.
    pub fn insert_profile(&mut self, profile_id: impl Into<String>, profile: SimilarityProfile) {
        self.profiles.insert(profile_id.into(), profile);
    }

    pub fn contains_rep(&self, rep_id: &str) -> bool {
        self.reps.contains_key(rep_id)
    }

    pub fn profile(&self, profile_id: &str) -> Option<&SimilarityProfile> {
        self.profiles.get(profile_id)
    }

    pub fn clear(&mut self) {
        self.reps.clear();
        self.profiles.clear();
    }
}

/// `phi(S)`: the categorical stand-in the decision core works with.
///
/// Exposes the label, the tag and the profile; the underlying vector and the
/// raw signal are not reachable through it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyObject {
    label: String,
    rep_ref: String,
    tag: EpistemicTag,
    profile_ref: String,
}

impl ProxyObject {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tag(&self) -> &EpistemicTag {
        &self.tag
    }

    pub fn rep_ref(&self) -> &str {
        &self.rep_ref
    }

    pub fn profile_ref(&self) -> &str {
        &self.profile_ref
    }

    pub fn profile<'a>(&self, store: &'a RepStore) -> Option<&'a SimilarityProfile> {
        store.profile(&self.profile_ref)
    }
}

pub fn bind_proxy(
    store: &RepStore,
    rep_id: &str,
    tag: EpistemicTag,
    label: impl Into<String>,
    profile_id: &str,
) -> Result<ProxyObject, CpsError> {
    if !store.contains_rep(rep_id) {
        return Err(CpsError::DanglingReference(rep_id.to_string()));
    }
    if store.profile(profile_id).is_none() {
        return Err(CpsError::DanglingReference(profile_id.to_string()));
    }
    Ok(ProxyObject {
        label: label.into(),
        rep_ref: rep_id.to_string(),
        tag,
        profile_ref: profile_id.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_tag;

    fn store() -> RepStore {
        let mut s = RepStore::new();
        s.insert_rep(PerceptualRepresentation::new("cat@0", vec![0.25, 0.75]));
        s.insert_profile(
            "profile:cat@0",
            SimilarityProfile { subject: "cat@0".into(), reference_ids: vec!["yellow-cat".into()], distances: vec![0.1] },
        );
        s
    }

    #[test]
    fn binds_and_reads() {
        let s = store();
        let p = bind_proxy(&s, "cat@0", make_tag(0.9, "t", "cat@0").unwrap(), "yellow-cat", "profile:cat@0").unwrap();
        assert_eq!(p.label(), "yellow-cat");
        assert_eq!(p.tag().reliability(), 0.9);
        assert_eq!(p.profile(&s).unwrap().distances, vec![0.1]);
    }

    #[test]
    fn dangling_references() {
        let s = store();
        let tag = make_tag(0.9, "t", "x").unwrap();
        assert!(matches!(bind_proxy(&s, "dog@0", tag.clone(), "l", "profile:cat@0"), Err(CpsError::DanglingReference(_))));
        assert!(matches!(bind_proxy(&s, "cat@0", tag, "l", "profile:dog@0"), Err(CpsError::DanglingReference(_))));
    }

    #[test]
    fn serialized_proxy_holds_no_vector() {
        let s = store();
        let p = bind_proxy(&s, "cat@0", make_tag(0.9, "t", "cat@0").unwrap(), "yellow-cat", "profile:cat@0").unwrap();
        let json = serde_json::to_value(&p).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["label", "profile_ref", "rep_ref", "tag"]);
        let text = json.to_string();
        assert!(!text.contains("0.25") && !text.contains("0.75"));
    }
}
