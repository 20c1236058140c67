//! Mechanism tables, their JSON file format, and random generators.
//!
//! A mechanism maps every weak order of its domain to a lottery. The file
//! format lists one entry per order in canonical order:
//!
//! ```text
//! {
//!   "m": 2,
//!   "entries": [
//!     { "order": "0>1", "lottery": ["1", "0"] },
//!     { "order": "1>0", "lottery": ["0", "1"] },
//!     { "order": "0,1", "lottery": ["1/2", "1/2"] }
//!   ]
//! }
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::Deserialize;

use crate::domain::Domain;
use crate::lottery::{Lottery, LotteryError};
use crate::order::{Alt, OrderError, WeakOrder};
use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum MechanismError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid mechanism JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid problem size: {0}")]
    Domain(#[from] OrderError),
    #[error("entry {entry}: invalid order {order:?}: {source}")]
    BadOrder {
        entry: usize,
        order: String,
        source: OrderError,
    },
    #[error("entry {entry} (order {order:?}): duplicate order")]
    Duplicate { entry: usize, order: String },
    #[error("order {order:?} has no entry")]
    Missing { order: String },
    #[error("entry {entry} (order {order:?}): malformed rational {text:?}")]
    BadRational {
        entry: usize,
        order: String,
        text: String,
    },
    #[error("entry {entry} (order {order:?}): {source}")]
    BadLottery {
        entry: usize,
        order: String,
        source: LotteryError,
    },
    #[error("table has {found} lotteries for {expected} orders")]
    Length { expected: usize, found: usize },
    #[error("mechanism is not deterministic at order {0:?}")]
    NotDeterministic(String),
}

/// A total map from the weak orders of a domain to lotteries.
#[derive(Debug, Clone)]
pub struct MechanismTable {
    domain: Arc<Domain>,
    lotteries: Vec<Lottery>,
}

impl PartialEq for MechanismTable {
    fn eq(&self, other: &Self) -> bool {
        self.domain.m() == other.domain.m() && self.lotteries == other.lotteries
    }
}

impl Eq for MechanismTable {}

impl MechanismTable {
    /// `lotteries[i]` is the outcome for the order with canonical index `i`.
    pub fn new(domain: Arc<Domain>, lotteries: Vec<Lottery>) -> Result<Self, MechanismError> {
        if lotteries.len() != domain.len() {
            return Err(MechanismError::Length {
                expected: domain.len(),
                found: lotteries.len(),
            });
        }
        for (i, lottery) in lotteries.iter().enumerate() {
            if lottery.m() != domain.m() {
                return Err(MechanismError::BadLottery {
                    entry: i,
                    order: domain.order(i).to_string(),
                    source: LotteryError::Length {
                        expected: domain.m(),
                        found: lottery.m(),
                    },
                });
            }
        }
        Ok(MechanismTable { domain, lotteries })
    }

    pub fn from_fn(domain: Arc<Domain>, f: impl FnMut(&WeakOrder) -> Lottery) -> Self {
        let lotteries = domain.orders().iter().map(f).collect();
        MechanismTable::new(domain, lotteries).expect("generator produced a malformed table")
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn m(&self) -> usize {
        self.domain.m()
    }

    pub fn lotteries(&self) -> &[Lottery] {
        &self.lotteries
    }

    pub fn at(&self, idx: usize) -> &Lottery {
        &self.lotteries[idx]
    }

    /// Outcome for `order`; `None` only if `order` is from another domain.
    pub fn outcome(&self, order: &WeakOrder) -> Option<&Lottery> {
        self.domain.index_of(order).map(|i| &self.lotteries[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&WeakOrder, &Lottery)> {
        self.domain.orders().iter().zip(&self.lotteries)
    }

    /// Every outcome is a unit vector.
    pub fn is_deterministic(&self) -> bool {
        self.lotteries.iter().all(|l| l.as_point().is_some())
    }

    pub fn ensure_deterministic(&self) -> Result<(), MechanismError> {
        match self.entries().find(|(_, l)| l.as_point().is_none()) {
            Some((order, _)) => Err(MechanismError::NotDeterministic(order.to_string())),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"m\": {},", self.m());
        let _ = writeln!(out, "  \"entries\": [");
        let n = self.lotteries.len();
        for (i, (order, lottery)) in self.entries().enumerate() {
            let probs: Vec<String> = lottery.probs().iter().map(|p| format!("\"{p}\"")).collect();
            let _ = writeln!(
                out,
                "    {{ \"order\": \"{order}\", \"lottery\": [{}] }}{}",
                probs.join(", "),
                if i + 1 < n { "," } else { "" }
            );
        }
        let _ = writeln!(out, "  ]");
        let _ = writeln!(out, "}}");
        out
    }

    pub fn from_json(text: &str) -> Result<Self, MechanismError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawEntry {
            order: String,
            lottery: Vec<String>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawTable {
            m: usize,
            entries: Vec<RawEntry>,
        }

        let raw: RawTable = serde_json::from_str(text)?;
        let domain = Domain::new(raw.m)?;
        let mut slots: Vec<Option<Lottery>> = vec![None; domain.len()];
        for (entry, item) in raw.entries.into_iter().enumerate() {
            let order = WeakOrder::parse_with_m(&item.order, raw.m).map_err(|source| {
                MechanismError::BadOrder {
                    entry,
                    order: item.order.clone(),
                    source,
                }
            })?;
            let mut probs = Vec::with_capacity(item.lottery.len());
            for text in &item.lottery {
                let p: Rat = text.parse().map_err(|_| MechanismError::BadRational {
                    entry,
                    order: item.order.clone(),
                    text: text.clone(),
                })?;
                probs.push(p);
            }
            let lottery = Lottery::with_len(probs, raw.m).map_err(|source| {
                MechanismError::BadLottery {
                    entry,
                    order: item.order.clone(),
                    source,
                }
            })?;
            let idx = domain.index_of(&order).expect("parsed order lies in its domain");
            if slots[idx].is_some() {
                return Err(MechanismError::Duplicate {
                    entry,
                    order: item.order,
                });
            }
            slots[idx] = Some(lottery);
        }
        let mut lotteries = Vec::with_capacity(slots.len());
        for (idx, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(l) => lotteries.push(l),
                None => {
                    return Err(MechanismError::Missing {
                        order: domain.order(idx).to_string(),
                    })
                }
            }
        }
        MechanismTable::new(domain, lotteries)
    }
}

pub fn load_mechanism(path: impl AsRef<Path>) -> Result<MechanismTable, MechanismError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MechanismError::Io {
        path: path.display().to_string(),
        source,
    })?;
    MechanismTable::from_json(&text)
}

pub fn save_mechanism(mech: &MechanismTable, path: impl AsRef<Path>) -> Result<(), MechanismError> {
    let path = path.as_ref();
    std::fs::write(path, mech.to_json()).map_err(|source| MechanismError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Names of the built-in mechanisms, in listing order.
pub const ZOO: [&str; 5] = [
    "uniform_lottery",
    "top_class_uniform",
    "min_top_dictator",
    "rank_score",
    "k_sensitive_boost",
];

/// Builds a zoo mechanism by name.
pub fn zoo(name: &str, domain: &Arc<Domain>) -> Option<MechanismTable> {
    Some(match name {
        "uniform_lottery" => uniform_lottery(domain),
        "top_class_uniform" => top_class_uniform(domain),
        "min_top_dictator" => min_top_dictator(domain),
        "rank_score" => rank_score(domain),
        "k_sensitive_boost" => k_sensitive_boost(domain),
        _ => return None,
    })
}

/// `(1/m, …, 1/m)` for every order.
pub fn uniform_lottery(domain: &Arc<Domain>) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |_| {
        Lottery::uniform_over(m, crate::order::AltSet::full(m))
    })
}

/// Uniform over the top class.
pub fn top_class_uniform(domain: &Arc<Domain>) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |r| Lottery::uniform_over(m, r.classes()[0]))
}

/// Selects the smallest-index member of the top class.
pub fn min_top_dictator(domain: &Arc<Domain>) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |r| {
        Lottery::point(m, r.classes()[0].min().expect("non-empty class"))
    })
}

/// Lottery proportional to `m - r(a) - (|M_k| - 1)/2`, where `r(a)` counts
/// the alternatives strictly above `a`.
pub fn rank_score(domain: &Arc<Domain>) -> MechanismTable {
    let m = domain.m() as i64;
    MechanismTable::from_fn(domain.clone(), |r| {
        let mut scores = vec![Rat::zero(); r.m()];
        let mut above = 0i64;
        for class in r.classes() {
            let size = class.len() as i64;
            let score = Rat::from_int(m - above) - Rat::new(size - 1, 2);
            for a in class.iter() {
                scores[a.0] = score.clone();
            }
            above += size;
        }
        Lottery::from_weights(&scores).expect("scores are positive")
    })
}

/// With `K` classes: `K/(K+1)` spread uniformly over the top class and the
/// remaining `1/(K+1)` uniformly over everything else; all on the top class
/// when `K = 1`.
pub fn k_sensitive_boost(domain: &Arc<Domain>) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |r| {
        let top = r.classes()[0];
        if r.num_classes() == 1 {
            return Lottery::uniform_over(m, top);
        }
        let k = r.num_classes() as i64;
        let top_each = Rat::new(k, (k + 1) * top.len() as i64);
        let rest_each = Rat::new(1, (k + 1) * (m - top.len()) as i64);
        let probs = (0..m)
            .map(|a| if top.contains(Alt(a)) { top_each.clone() } else { rest_each.clone() })
            .collect();
        Lottery::new(probs).expect("masses sum to one")
    })
}

/// Uniform over the bottom class. Rewards ranking an alternative lower.
pub fn bottom_class_uniform(domain: &Arc<Domain>) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |r| {
        Lottery::uniform_over(m, *r.classes().last().expect("non-empty order"))
    })
}

/// Always selects `a`.
pub fn constant_point(domain: &Arc<Domain>, a: Alt) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |_| Lottery::point(m, a))
}

/// Independent lottery per order: `m` integers drawn uniformly from
/// `0..=max_weight`, redrawn if all are zero, then normalized.
pub fn random_mechanism<R: Rng + ?Sized>(
    domain: &Arc<Domain>,
    rng: &mut R,
    max_weight: i64,
) -> MechanismTable {
    assert!(max_weight >= 1);
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |_| loop {
        let weights: Vec<Rat> = (0..m)
            .map(|_| Rat::from_int(rng.gen_range(0..=max_weight)))
            .collect();
        if weights.iter().any(|w| !w.is_zero()) {
            return Lottery::from_weights(&weights).expect("non-zero weights");
        }
    })
}

/// Independent uniformly random alternative per order.
pub fn random_deterministic<R: Rng + ?Sized>(domain: &Arc<Domain>, rng: &mut R) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |_| Lottery::point(m, Alt(rng.gen_range(0..m))))
}

/// The deterministic mechanism whose choice at order `i` is digit `i` of
/// `code` in base `m`.
pub fn deterministic_from_code(domain: &Arc<Domain>, mut code: u64) -> MechanismTable {
    let m = domain.m();
    MechanismTable::from_fn(domain.clone(), |_| {
        let a = (code % m as u64) as usize;
        code /= m as u64;
        Lottery::point(m, Alt(a))
    })
}

/// Pointwise convex combination `Σ w_i · mech_i` with weights summing to one.
pub fn mixture(parts: &[(Rat, &MechanismTable)]) -> MechanismTable {
    let domain = parts[0].1.domain().clone();
    let lotteries = (0..domain.len())
        .map(|i| {
            let probs = (0..domain.m())
                .map(|a| parts.iter().map(|(w, mech)| w * mech.at(i).prob(Alt(a))).sum())
                .collect();
            Lottery::new(probs).expect("convex weights")
        })
        .collect();
    MechanismTable::new(domain, lotteries).expect("same domain")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lot(items: &[&str]) -> Lottery {
        Lottery::new(items.iter().map(|s| s.parse().unwrap()).collect()).unwrap()
    }

    fn at<'a>(mech: &'a MechanismTable, order: &str) -> &'a Lottery {
        mech.outcome(&order.parse().unwrap()).unwrap()
    }

    #[test]
    fn zoo_examples() {
        let d2 = Domain::new(2).unwrap();
        let u = uniform_lottery(&d2);
        assert!(u.lotteries().iter().all(|l| *l == lot(&["1/2", "1/2"])));

        let d3 = Domain::new(3).unwrap();
        assert_eq!(*at(&top_class_uniform(&d3), "0,1>2"), lot(&["1/2", "1/2", "0"]));
        let dict = min_top_dictator(&d3);
        assert_eq!(*at(&dict, "1,2>0"), lot(&["0", "1", "0"]));
        assert!(dict.is_deterministic());

        let rs = rank_score(&d3);
        assert_eq!(*at(&rs, "0>1>2"), lot(&["1/2", "1/3", "1/6"]));
        assert_eq!(*at(&rs, "0,1>2"), lot(&["5/12", "5/12", "1/6"]));

        let kb = k_sensitive_boost(&d3);
        assert_eq!(*at(&kb, "0,1,2"), lot(&["1/3", "1/3", "1/3"]));
        assert_eq!(*at(&kb, "0,1>2"), lot(&["1/3", "1/3", "1/3"]));
        assert_eq!(*at(&kb, "0>1,2"), lot(&["2/3", "1/6", "1/6"]));
        assert_eq!(*at(&kb, "0>1>2"), lot(&["3/4", "1/8", "1/8"]));
    }

    #[test]
    fn generators_are_total() {
        for m in 1..=4 {
            let d = Domain::new(m).unwrap();
            for name in ZOO {
                assert_eq!(zoo(name, &d).unwrap().lotteries().len(), d.len());
            }
        }
        assert!(zoo("nope", &Domain::new(2).unwrap()).is_none());
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        for m in 1..=4 {
            let d = Domain::new(m).unwrap();
            for name in ZOO {
                let mech = zoo(name, &d).unwrap();
                let text = mech.to_json();
                let back = MechanismTable::from_json(&text).unwrap();
                assert_eq!(back, mech);
                assert_eq!(back.to_json(), text);
            }
        }
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u3.json");
        let mech = uniform_lottery(&Domain::new(3).unwrap());
        save_mechanism(&mech, &path).unwrap();
        assert_eq!(load_mechanism(&path).unwrap(), mech);
        assert!(matches!(
            load_mechanism(dir.path().join("absent.json")),
            Err(MechanismError::Io { .. })
        ));
    }

    fn uniform3_without(skip: &str) -> String {
        let mech = uniform_lottery(&Domain::new(3).unwrap());
        let entries: Vec<String> = mech
            .entries()
            .filter(|(o, _)| o.to_string() != skip)
            .map(|(o, _)| format!("{{\"order\":\"{o}\",\"lottery\":[\"1/3\",\"1/3\",\"1/3\"]}}"))
            .collect();
        format!("{{\"m\":3,\"entries\":[{}]}}", entries.join(","))
    }

    #[test]
    fn load_errors_are_specific() {
        match MechanismTable::from_json(&uniform3_without("0,1,2")) {
            Err(MechanismError::Missing { order }) => assert_eq!(order, "0,1,2"),
            other => panic!("unexpected {other:?}"),
        }

        let dup = uniform3_without("").replacen(
            "{\"order\":\"0>1>2\"",
            "{\"order\":\"0>1>2\",\"lottery\":[\"1\",\"0\",\"0\"]},{\"order\":\"0>1>2\"",
            1,
        );
        assert!(matches!(
            MechanismTable::from_json(&dup),
            Err(MechanismError::Duplicate { entry: 1, .. })
        ));

        let heavy = uniform3_without("").replacen("[\"1/3\",\"1/3\",\"1/3\"]", "[\"1/2\",\"1/3\",\"1/3\"]", 1);
        match MechanismTable::from_json(&heavy) {
            Err(MechanismError::BadLottery { entry: 0, source: LotteryError::NotNormalized(s), .. }) => {
                assert_eq!(s, Rat::new(7, 6))
            }
            other => panic!("unexpected {other:?}"),
        }

        let garbled = uniform3_without("").replacen("\"1/3\"", "\"1/x\"", 1);
        assert!(matches!(
            MechanismTable::from_json(&garbled),
            Err(MechanismError::BadRational { entry: 0, .. })
        ));

        let bad_order = uniform3_without("").replacen("\"0>1>2\"", "\"0>1>1\"", 1);
        assert!(matches!(
            MechanismTable::from_json(&bad_order),
            Err(MechanismError::BadOrder { .. })
        ));

        assert!(matches!(MechanismTable::from_json("{"), Err(MechanismError::Json(_))));
    }

    #[test]
    fn random_generators_are_valid_and_seeded() {
        let d = Domain::new(3).unwrap();
        let a = random_mechanism(&d, &mut ChaCha8Rng::seed_from_u64(7), 12);
        let b = random_mechanism(&d, &mut ChaCha8Rng::seed_from_u64(7), 12);
        assert_eq!(a, b);
        let det = random_deterministic(&d, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(det.is_deterministic());
        assert!(!a.is_deterministic() || a.ensure_deterministic().is_ok());
        assert!(uniform_lottery(&d).ensure_deterministic().is_err());
    }

    #[test]
    fn deterministic_codes_cover_all_tables_at_m2() {
        let d = Domain::new(2).unwrap();
        let tables: std::collections::HashSet<String> =
            (0..8).map(|c| deterministic_from_code(&d, c).to_json()).collect();
        assert_eq!(tables.len(), 8);
    }
}
