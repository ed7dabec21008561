use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;

use super::{pd_to_rpd, Assignment, PdModel, Relation, RpdModel, Violation};
use crate::error::{Error, Result};
use crate::semantics::eval;
use crate::syntax::{Formula, VarSet, Vocabulary};

/// A choice: strategies for the members of a coalition, keyed by player.
/// Its keys are the domain of the choice.
pub type Choice = BTreeMap<String, String>;

/// A strategy for every player.
pub type StrategyProfile = BTreeMap<String, String>;

/// Blocks of a partition of the players, kept sorted.
pub type Partition = Vec<VarSet>;

/// Sorts the blocks so equal partitions compare equal.
pub fn partition_key(mut p: Partition) -> Partition {
    p.sort();
    p
}

/// All partitions of `players`, each in sorted form.
pub fn all_partitions(players: &[String]) -> Vec<Partition> {
    fn go(rest: &[String], acc: &mut Vec<VarSet>, out: &mut Vec<Partition>) {
        let Some((first, tail)) = rest.split_first() else {
            out.push(partition_key(acc.clone()));
            return;
        };
        for k in 0..acc.len() {
            acc[k].insert(first.clone());
            go(tail, acc, out);
            acc[k].remove(first);
        }
        acc.push([first.clone()].into_iter().collect());
        go(tail, acc, out);
        acc.pop();
    }
    let mut out = Vec::new();
    go(players, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Whether every block of `p` lies inside some block of `q`.
pub fn finer(p: &Partition, q: &Partition) -> bool {
    p.iter().all(|b| q.iter().any(|c| b.is_subset(c)))
}

pub fn render_partition(p: &Partition) -> String {
    let blocks: Vec<String> = p
        .iter()
        .map(|b| format!("{{{}}}", b.iter().cloned().collect::<Vec<_>>().join(",")))
        .collect();
    format!("{{{}}}", blocks.join(","))
}

pub fn render_choice(c: &Choice) -> String {
    let pairs: Vec<String> = c.iter().map(|(p, s)| format!("({p},{s})")).collect();
    format!("{{{}}}", pairs.join(","))
}

/// A choice profile: one choice per player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub id: String,
    pub choices: BTreeMap<String, Choice>,
}

impl Profile {
    /// `a_dom`, the set of choice domains.
    pub fn dom_partition(&self) -> Partition {
        let blocks: BTreeSet<VarSet> = self
            .choices
            .values()
            .map(|c| c.keys().cloned().collect())
            .collect();
        blocks.into_iter().collect()
    }

    /// `a_merge`, the union of all choices.
    pub fn merge(&self) -> Result<StrategyProfile> {
        let mut out = StrategyProfile::new();
        for c in self.choices.values() {
            for (p, s) in c {
                if let Some(prev) = out.insert(p.clone(), s.clone()) {
                    if &prev != s {
                        return Err(Error::Model(format!(
                            "profile {} assigns both {prev} and {s} to player {p}",
                            self.id
                        )));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Why the profile is not realizable, if it is not.
    pub fn realizability_violations(
        &self,
        players: &[String],
        strategies: &[String],
    ) -> Vec<Violation> {
        let mut out = Vec::new();
        let cond = "condition 1: realizable";
        for p in players {
            match self.choices.get(p) {
                None => out.push(Violation::new(
                    cond,
                    format!("{}: player {p} has no choice", self.id),
                )),
                Some(c) if !c.contains_key(p) => out.push(Violation::new(
                    cond,
                    format!(
                        "{}: player {p} is outside the domain of its own choice",
                        self.id
                    ),
                )),
                Some(c) => {
                    for (q, s) in c {
                        if !players.contains(q) || !strategies.contains(s) {
                            out.push(Violation::new(
                                cond,
                                format!("{}: choice of {p} uses unknown ({q},{s})", self.id),
                            ));
                        }
                    }
                }
            }
        }
        for q in self.choices.keys() {
            if !players.contains(q) {
                out.push(Violation::new(
                    cond,
                    format!("{}: unknown player {q}", self.id),
                ));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (p, cp) in &self.choices {
            for (q, cq) in &self.choices {
                if p >= q {
                    continue;
                }
                let dp: VarSet = cp.keys().cloned().collect();
                let dq: VarSet = cq.keys().cloned().collect();
                if dp == dq && cp != cq {
                    out.push(Violation::new(
                        cond,
                        format!(
                            "{}: players {p} and {q} share a domain but choose differently",
                            self.id
                        ),
                    ));
                } else if dp != dq && !dp.is_disjoint(&dq) {
                    out.push(Violation::new(
                        cond,
                        format!(
                            "{}: domains of {p} and {q} overlap without being equal",
                            self.id
                        ),
                    ));
                }
            }
        }
        out
    }
}

/// A coalition-structured model: realizable profiles with ordinal
/// utilities, read as total preorders per player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpdModel {
    pub players: Vec<String>,
    pub strategies: Vec<String>,
    pub profiles: Vec<Profile>,
    /// Profile id to utility per player.
    pub utilities: BTreeMap<String, BTreeMap<String, i64>>,
}

impl CpdModel {
    pub fn size(&self) -> usize {
        self.profiles.len()
    }

    pub fn profile_index(&self, id: &str) -> Option<usize> {
        self.profiles.iter().position(|a| a.id == id)
    }

    pub fn utility(&self, a: usize, player: &str) -> Option<i64> {
        self.utilities
            .get(&self.profiles[a].id)
            .and_then(|u| u.get(player))
            .copied()
    }

    /// Players as variables, profile ids as nominals.
    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::new(
            self.players.clone(),
            Vec::new(),
            self.profiles
                .iter()
                .map(|a| a.id.clone())
                .collect::<Vec<_>>(),
        )
    }

    /// `σ_A(π)`: merges of the profiles whose domain partition is `π`.
    pub fn sigma(&self, pi: &Partition) -> BTreeSet<StrategyProfile> {
        let key = partition_key(pi.clone());
        self.profiles
            .iter()
            .filter(|a| a.dom_partition() == key)
            .filter_map(|a| a.merge().ok())
            .collect()
    }

    /// The preference of `player`: `a ⪯ b` iff `u(a) <= u(b)`. Missing
    /// utilities make the pair incomparable.
    pub fn preference(&self, player: &str) -> Relation {
        let n = self.size();
        let mut r = Relation::empty(n);
        for a in 0..n {
            for b in 0..n {
                if let (Some(ua), Some(ub)) = (self.utility(a, player), self.utility(b, player)) {
                    if ua <= ub {
                        r.insert(a, b);
                    }
                }
            }
        }
        r
    }

    /// The model as a PD-model: objects are all partial maps from players
    /// to strategies, each profile maps a player to its choice, and every
    /// profile is named by its id.
    pub fn to_pd(&self) -> Result<PdModel> {
        let vocab = self.vocabulary()?;
        let mut objects = Vec::new();
        let mut index = BTreeMap::new();
        let k = self.players.len();
        for mask in 0u64..(1u64 << k) {
            let dom: Vec<&String> = (0..k)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| &self.players[b])
                .collect();
            let total = self.strategies.len().pow(dom.len() as u32);
            for code in 0..total {
                let mut c = Choice::new();
                let mut rest = code;
                for p in &dom {
                    c.insert(
                        (*p).clone(),
                        self.strategies[rest % self.strategies.len()].clone(),
                    );
                    rest /= self.strategies.len();
                }
                index.insert(c.clone(), objects.len());
                objects.push(render_choice(&c));
            }
        }
        let mut assignments = Vec::new();
        for a in &self.profiles {
            let mut values = Vec::new();
            for p in &self.players {
                let c = a
                    .choices
                    .get(p)
                    .ok_or_else(|| Error::Model(format!("{}: no choice for {p}", a.id)))?;
                let o = index.get(c).ok_or_else(|| {
                    Error::Model(format!(
                        "{}: choice of {p} is not a map into the strategies",
                        a.id
                    ))
                })?;
                values.push(*o);
            }
            assignments.push(Assignment {
                id: a.id.clone(),
                values,
            });
        }
        Ok(PdModel {
            vocab,
            objects,
            interpretation: BTreeMap::new(),
            assignments,
            pref: self.players.iter().map(|p| self.preference(p)).collect(),
            naming: self
                .profiles
                .iter()
                .enumerate()
                .map(|(k, a)| (a.id.clone(), k))
                .collect(),
        })
    }

    /// The relational presentation with every profile named.
    pub fn to_rpd(&self) -> Result<RpdModel> {
        pd_to_rpd(&self.to_pd()?)
    }
}

/// Checks realizability and the five structural conditions.
pub fn validate_cpd(m: &CpdModel) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.players.is_empty() || m.strategies.is_empty() || m.profiles.is_empty() {
        out.push(Violation::new(
            "non-empty",
            "players, strategies and profiles are required",
        ));
        return out;
    }
    let ids: BTreeSet<&String> = m.profiles.iter().map(|a| &a.id).collect();
    if ids.len() != m.size() {
        out.push(Violation::new(
            "profiles: distinct ids",
            "a profile id repeats",
        ));
    }
    for a in &m.profiles {
        out.extend(a.realizability_violations(&m.players, &m.strategies));
    }
    if !out.is_empty() {
        return out;
    }
    let parts = all_partitions(&m.players);
    let present: BTreeSet<Partition> = m.profiles.iter().map(|a| a.dom_partition()).collect();
    for p in &parts {
        if !present.contains(p) {
            out.push(Violation::new(
                "condition 2: every partition occurs",
                format!("no profile has partition {}", render_partition(p)),
            ));
        }
    }
    let sig: BTreeMap<&Partition, BTreeSet<StrategyProfile>> =
        parts.iter().map(|p| (p, m.sigma(p))).collect();
    for p in &parts {
        for q in &parts {
            if p != q && finer(p, q) {
                if let Some(s) = sig[p].difference(&sig[q]).next() {
                    out.push(Violation::new(
                        "condition 3: sigma monotone under coarsening",
                        format!(
                            "{} is in sigma({}) but not in sigma({})",
                            render_choice(s),
                            render_partition(p),
                            render_partition(q)
                        ),
                    ));
                }
            }
        }
    }
    for (a, pa) in m.profiles.iter().enumerate() {
        for p in &m.players {
            if m.utility(a, p).is_none() {
                out.push(Violation::new(
                    "condition 5: total preference",
                    format!("no utility of player {p} at {}", pa.id),
                ));
            }
        }
    }
    for id in m.utilities.keys() {
        if !ids.contains(id) {
            out.push(Violation::new(
                "utilities",
                format!("utility for unknown profile {id}"),
            ));
        }
    }
    let merges: Vec<StrategyProfile> = m
        .profiles
        .iter()
        .map(|a| a.merge().unwrap_or_default())
        .collect();
    for a in 0..m.size() {
        for b in (a + 1)..m.size() {
            if merges[a] != merges[b] {
                continue;
            }
            for p in &m.players {
                if m.utility(a, p) != m.utility(b, p) {
                    out.push(Violation::new(
                        "condition 4: equal merge, indifference",
                        format!(
                            "{} and {} share a merge but player {p} is not indifferent",
                            m.profiles[a].id, m.profiles[b].id
                        ),
                    ));
                }
            }
        }
    }
    out
}

/// Profiles with a two-block partition `{X,-X}` where one block
/// functionally determines the other, as `(profile index, X)`.
pub fn determined_splits(m: &CpdModel) -> Result<Vec<(usize, VarSet)>> {
    let rpd = m.to_rpd()?;
    let vocab = &rpd.vocab;
    let mut out = Vec::new();
    for (k, a) in m.profiles.iter().enumerate() {
        let dom = a.dom_partition();
        if dom.len() != 2 {
            continue;
        }
        for x in &dom {
            let f = Formula::dep_set(x, &vocab.complement(x));
            if eval(&rpd, k, &f)? {
                out.push((k, x.clone()));
            }
        }
    }
    Ok(out)
}

/// CPD conditions plus the requirement that at every profile split into
/// `{X,-X}` neither block determines the other.
pub fn validate_rcpd(m: &CpdModel) -> Vec<Violation> {
    let mut out = validate_cpd(m);
    if !out.is_empty() {
        return out;
    }
    match determined_splits(m) {
        Ok(splits) => {
            for (k, x) in splits {
                let block: Vec<String> = x.into_iter().collect();
                out.push(Violation::new(
                    "RCPD: no block determines its complement",
                    format!(
                        "at {}, {{{}}} determines the other block",
                        m.profiles[k].id,
                        block.join(",")
                    ),
                ));
            }
        }
        Err(e) => out.push(Violation::new("RCPD", e.to_string())),
    }
    out
}

/// Builds a CPD model from the strategy assignments available to each
/// partition and ordinal utilities per strategy assignment. Profiles are
/// named `a0`, `a1`, ... in partition order.
pub fn build_cpd_from_game(
    players: &[String],
    strategies: &[String],
    table: &BTreeMap<Partition, Vec<StrategyProfile>>,
    utilities: &BTreeMap<StrategyProfile, BTreeMap<String, i64>>,
) -> Result<CpdModel> {
    let parts = all_partitions(players);
    let table: BTreeMap<Partition, BTreeSet<StrategyProfile>> = table
        .iter()
        .map(|(p, s)| (partition_key(p.clone()), s.iter().cloned().collect()))
        .collect();
    for p in &parts {
        match table.get(p) {
            Some(s) if !s.is_empty() => {}
            _ => {
                return Err(Error::Invalid(format!(
                    "condition 2: partition {} has no strategy assignment",
                    render_partition(p)
                )))
            }
        }
    }
    if let Some(p) = table.keys().find(|p| !parts.contains(p)) {
        return Err(Error::Invalid(format!(
            "{} is not a partition of the players",
            render_partition(p)
        )));
    }
    for p in &parts {
        for q in &parts {
            if p != q && finer(p, q) && !table[p].is_subset(&table[q]) {
                return Err(Error::Invalid(format!(
                    "condition 3: sigma({}) is not contained in sigma({})",
                    render_partition(p),
                    render_partition(q)
                )));
            }
        }
    }
    let mut profiles = Vec::new();
    let mut utils = BTreeMap::new();
    for p in &parts {
        for s in &table[p] {
            let total = players
                .iter()
                .all(|i| s.get(i).is_some_and(|v| strategies.contains(v)));
            if !total || s.len() != players.len() {
                return Err(Error::Invalid(format!(
                    "{} is not a strategy profile",
                    render_choice(s)
                )));
            }
            let u = utilities
                .get(s)
                .ok_or_else(|| Error::Invalid(format!("no utility for {}", render_choice(s))))?;
            let id = format!("a{}", profiles.len());
            let mut choices = BTreeMap::new();
            for block in p {
                let c: Choice = block.iter().map(|i| (i.clone(), s[i].clone())).collect();
                for i in block {
                    choices.insert(i.clone(), c.clone());
                }
            }
            utils.insert(id.clone(), u.clone());
            profiles.push(Profile { id, choices });
        }
    }
    let m = CpdModel {
        players: players.to_vec(),
        strategies: strategies.to_vec(),
        profiles,
        utilities: utils,
    };
    let v = validate_cpd(&m);
    if let Some(first) = v.first() {
        return Err(Error::Invalid(first.to_string()));
    }
    Ok(m)
}

/// Profiles as a bit set over profile indices.
pub fn profile_set(m: &CpdModel, ids: &[&str]) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(m.size());
    for id in ids {
        if let Some(k) = m.profile_index(id) {
            s.insert(k);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::varset;

    fn s(items: &[(&str, &str)]) -> StrategyProfile {
        items
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn players(k: usize) -> Vec<String> {
        (1..=k).map(|i| i.to_string()).collect()
    }

    #[test]
    fn partitions_of_three() {
        let ps = all_partitions(&players(3));
        assert_eq!(ps.len(), 5);
        assert!(ps.contains(&vec![varset(["1", "2", "3"])]));
        assert_eq!(all_partitions(&players(4)).len(), 15);
    }

    #[test]
    fn finer_relation() {
        let singles = vec![varset(["1"]), varset(["2"])];
        let full = vec![varset(["1", "2"])];
        assert!(finer(&singles, &full));
        assert!(!finer(&full, &singles));
        assert!(finer(&full, &full));
    }

    #[test]
    fn single_player_single_strategy() {
        let p = players(1);
        let st = vec!["alpha".to_string()];
        let sp = s(&[("1", "alpha")]);
        let table = [(vec![varset(["1"])], vec![sp.clone()])].into();
        let utils = [(sp, [("1".to_string(), 0)].into())].into();
        let m = build_cpd_from_game(&p, &st, &table, &utils).unwrap();
        assert_eq!(m.size(), 1);
        assert!(validate_cpd(&m).is_empty());
        assert!(validate_rcpd(&m).is_empty());
    }

    #[test]
    fn missing_grand_coalition_is_condition_two() {
        let p = players(2);
        let st = vec!["a".to_string()];
        let sp = s(&[("1", "a"), ("2", "a")]);
        let table = [(vec![varset(["1"]), varset(["2"])], vec![sp.clone()])].into();
        let utils = [(
            sp.clone(),
            [("1".to_string(), 0), ("2".to_string(), 0)].into(),
        )]
        .into();
        assert!(build_cpd_from_game(&p, &st, &table, &utils).is_err());
        let mut m = build_cpd_from_game(
            &p,
            &st,
            &[
                (vec![varset(["1"]), varset(["2"])], vec![sp.clone()]),
                (vec![varset(["1", "2"])], vec![sp]),
            ]
            .into(),
            &utils,
        )
        .unwrap();
        m.profiles.retain(|a| a.dom_partition().len() == 2);
        let v = validate_cpd(&m);
        assert!(v.iter().any(|x| x.invariant.starts_with("condition 2")));
    }

    #[test]
    fn overlapping_domains_are_not_realizable() {
        let a = Profile {
            id: "bad".into(),
            choices: [
                ("1".to_string(), s(&[("1", "a"), ("2", "a")])),
                ("2".to_string(), s(&[("2", "a"), ("3", "a")])),
                ("3".to_string(), s(&[("2", "a"), ("3", "a")])),
            ]
            .into(),
        };
        let v = a.realizability_violations(&players(3), &["a".to_string()]);
        assert!(!v.is_empty());
    }
}
