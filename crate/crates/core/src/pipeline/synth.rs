use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{format_corpus, Dataset, Example, Sentence, Tag};
use crate::kb::{KbRecord, KbStore, PageStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    /// Share of sentences whose context says nothing about the label.
    pub kb_fraction: f64,
    /// Per entity-token corruption probability in the test split.
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_entities: 360,
            n_train: 500,
            n_dev: 100,
            n_test: 200,
            kb_fraction: 0.7,
            noise_rate: 0.3,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, v) in [("kb_fraction", self.kb_fraction), ("noise_rate", self.noise_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PipelineError::Config(format!("{name} {v} is outside [0, 1]")));
            }
        }
        if !(3 * LABELS.len()..100_000).contains(&self.n_entities) {
            return Err(PipelineError::Config(format!(
                "n_entities must be in {}..100000",
                3 * LABELS.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    pub kb: KbStore,
}

impl SyntheticCorpus {
    /// Writes `train.tsv`, `dev.tsv`, `test.tsv` and `kb.jsonl`.
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        for (name, d) in [("train", &self.train), ("dev", &self.dev), ("test", &self.test)] {
            let path = dir.join(format!("{name}.tsv"));
            fs::write(&path, format_corpus(d)).map_err(|e| PipelineError::io(&path, e))?;
        }
        let path = dir.join("kb.jsonl");
        fs::write(&path, self.kb.to_snapshot()).map_err(|e| PipelineError::io(&path, e))
    }
}

struct LabelSpec {
    fine: &'static str,
    coarse: &'static str,
    /// instance_of classes, or occupations for people
    kinds: &'static [&'static str],
    person: bool,
    cues: &'static [&'static str],
}

const LABELS: [LabelSpec; 12] = [
    LabelSpec {
        fine: "HumanSettlement",
        coarse: "place",
        kinds: &["city", "town", "village"],
        person: false,
        cues: &["the mayor of {} resigned today", "people living in {} voted early"],
    },
    LabelSpec {
        fine: "Facility",
        coarse: "place",
        kinds: &["museum", "stadium", "airport"],
        person: false,
        cues: &["the new terminal at {} opened", "visitors crowded the halls of {}"],
    },
    LabelSpec {
        fine: "VisualWork",
        coarse: "creative work",
        kinds: &["film", "television series"],
        person: false,
        cues: &["the film {} premiered at the festival", "critics praised the director of {}"],
    },
    LabelSpec {
        fine: "MusicalWork",
        coarse: "creative work",
        kinds: &["song", "album"],
        person: false,
        cues: &["the band played the song {} twice", "the single {} topped the charts"],
    },
    LabelSpec {
        fine: "SportsGRP",
        coarse: "organization",
        kinds: &["football club", "basketball team"],
        person: false,
        cues: &["fans cheered as {} won the match", "the club {} signed a new striker"],
    },
    LabelSpec {
        fine: "PublicCorp",
        coarse: "organization",
        kinds: &["public company", "listed corporation"],
        person: false,
        cues: &["shares of {} fell sharply", "the company {} reported record profits"],
    },
    LabelSpec {
        fine: "Scientist",
        coarse: "person",
        kinds: &["physicist", "chemist", "biologist"],
        person: true,
        cues: &["the researcher {} published a study", "{} ran experiments in the lab"],
    },
    LabelSpec {
        fine: "Athlete",
        coarse: "person",
        kinds: &["footballer", "sprinter", "tennis player"],
        person: true,
        cues: &["{} scored twice in the final", "the coach praised {} after the race"],
    },
    LabelSpec {
        fine: "Food",
        coarse: "product",
        kinds: &["dish", "cheese", "pastry"],
        person: false,
        cues: &["we ate {} for dinner", "the chef cooked {} with garlic"],
    },
    LabelSpec {
        fine: "Vehicle",
        coarse: "product",
        kinds: &["car model", "motorcycle"],
        person: false,
        cues: &["he drove the {} to work", "the new {} has a hybrid engine"],
    },
    LabelSpec {
        fine: "Disease",
        coarse: "medical topic",
        kinds: &["disease", "infection"],
        person: false,
        cues: &["patients with {} need rest", "an outbreak of {} was reported"],
    },
    LabelSpec {
        fine: "Medication/Vaccine",
        coarse: "medical topic",
        kinds: &["medication", "vaccine"],
        person: false,
        cues: &["the doctor prescribed {} twice daily", "a dose of {} reduced the fever"],
    },
];

const NEUTRAL_ONE: [&str; 6] = [
    "{} was mentioned in the report",
    "we talked about {} yesterday",
    "the article about {} was long",
    "everyone remembers {}",
    "{} came up during the meeting",
    "she wrote a short note on {}",
];

const NEUTRAL_TWO: [&str; 2] = ["{} and {} were both in the news", "the report compared {} with {}"];

const REGIONS: [&str; 4] = ["northern", "southern", "eastern", "western"];
const HUMAN_QID: &str = "Q5";

/// Fine labels the generator draws from.
pub fn synthetic_labels() -> Vec<&'static str> {
    LABELS.iter().map(|l| l.fine).collect()
}

struct Entity {
    name: Vec<String>,
    label: usize,
}

fn word(rng: &mut ChaCha8Rng) -> String {
    const C: &[u8] = b"bdfgklmnprstvz";
    const V: &[u8] = b"aeiou";
    let mut w = String::new();
    for _ in 0..rng.gen_range(2..=3) {
        w.push(C[rng.gen_range(0..C.len())] as char);
        w.push(V[rng.gen_range(0..V.len())] as char);
    }
    let mut cs = w.chars();
    let first = cs.next().unwrap().to_ascii_uppercase();
    std::iter::once(first).chain(cs).collect()
}

/// One or two substitutions outside the first character.
fn corrupt(token: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = token.chars().collect();
    if chars.len() < 2 {
        return token.to_string();
    }
    let edits = if chars.len() > 3 && rng.gen_bool(0.5) { 2 } else { 1 };
    let mut positions: Vec<usize> = (1..chars.len()).collect();
    positions.shuffle(rng);
    for &i in positions.iter().take(edits) {
        chars[i] = other_letter(chars[i], rng);
    }
    chars.into_iter().collect()
}

fn other_letter(c: char, rng: &mut ChaCha8Rng) -> char {
    loop {
        let x = rng.gen_range(b'a'..=b'z') as char;
        if x != c {
            return x;
        }
    }
}

/// Entities, a knowledge base that encodes every label, and three disjoint
/// splits. Deterministic for a given spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus, PipelineError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // class records
    let mut records = vec![KbRecord::named(HUMAN_QID, "human")];
    let mut class_qid: BTreeMap<&str, String> = BTreeMap::new();
    for kind in LABELS.iter().flat_map(|l| l.kinds) {
        let qid = format!("Q{}", 10 + class_qid.len());
        let mut r = KbRecord::named(qid.clone(), *kind);
        r.description_en = Some("class of things".into());
        records.push(r);
        class_qid.insert(kind, qid);
    }

    let mut seen = HashSet::new();
    let mut entities: Vec<Entity> = Vec::with_capacity(spec.n_entities);
    for i in 0..spec.n_entities {
        let name = loop {
            let n: Vec<String> = (0..rng.gen_range(1..=2)).map(|_| word(&mut rng)).collect();
            if seen.insert(n.join(" ")) {
                break n;
            }
        };
        entities.push(Entity {
            name,
            label: i % LABELS.len(),
        });
    }

    for (i, e) in entities.iter().enumerate() {
        let spec_l = &LABELS[e.label];
        let name = e.name.join(" ");
        let qid = format!("Q{}", 200_000 + i);
        let kind = *spec_l.kinds.choose(&mut rng).unwrap();
        let region = *REGIONS.choose(&mut rng).unwrap();
        let mut r = KbRecord::named(qid, name.clone());
        r.description_en = Some(format!("{} from the {region} region", spec_l.coarse));
        if spec_l.person {
            r.instance_of = vec![HUMAN_QID.into()];
            r.occupation = vec![class_qid[kind].clone()];
        } else {
            r.instance_of = vec![class_qid[kind].clone()];
        }
        if rng.gen_bool(0.8) {
            r.summary_en = Some(format!("{name} is a {kind} from the {region} region."));
        }
        records.push(r);

        // a homonym that sorts first on ties and must be skipped
        if rng.gen_bool(0.15) {
            let status = *[
                PageStatus::Deleted,
                PageStatus::Empty,
                PageStatus::Disambiguation,
                PageStatus::List,
            ]
            .choose(&mut rng)
            .unwrap();
            let mut h = KbRecord::named(format!("Q{}", 100_000 + i), name);
            h.status = status;
            if status == PageStatus::Disambiguation {
                h.description_en = Some("disambiguation page".into());
            }
            records.push(h);
        }
    }
    let kb = KbStore::from_records(records).map_err(PipelineError::Kb)?;

    let mut order: Vec<usize> = (0..entities.len()).collect();
    order.shuffle(&mut rng);
    let n_train_e = entities.len() * 3 / 5;
    let n_dev_e = entities.len() / 5;
    let pools = [
        &order[..n_train_e],
        &order[n_train_e..n_train_e + n_dev_e],
        &order[n_train_e + n_dev_e..],
    ];

    let mut make_split = |prefix: &str, n: usize, pool: &[usize], noise: f64| -> Result<Dataset, PipelineError> {
        let mut examples = Vec::with_capacity(n);
        for s in 0..n {
            let (template, ents): (&str, Vec<usize>) = if rng.gen_bool(spec.kb_fraction) {
                if rng.gen_bool(0.3) {
                    let pair: Vec<usize> = pool.choose_multiple(&mut rng, 2).copied().collect();
                    (*NEUTRAL_TWO.choose(&mut rng).unwrap(), pair)
                } else {
                    let e = *pool.choose(&mut rng).unwrap();
                    (*NEUTRAL_ONE.choose(&mut rng).unwrap(), vec![e])
                }
            } else {
                let e = *pool.choose(&mut rng).unwrap();
                (*LABELS[entities[e].label].cues.choose(&mut rng).unwrap(), vec![e])
            };
            let mut words = Vec::new();
            let mut tags = Vec::new();
            let mut noisy = false;
            let mut next = ents.iter();
            for piece in template.split(' ') {
                if piece == "{}" {
                    let e = &entities[*next.next().unwrap()];
                    let label = LABELS[e.label].fine;
                    for (j, tok) in e.name.iter().enumerate() {
                        let tok = if noise > 0.0 && rng.gen_bool(noise) {
                            noisy = true;
                            corrupt(tok, &mut rng)
                        } else {
                            tok.clone()
                        };
                        words.push(tok);
                        tags.push(if j == 0 {
                            Tag::B(label.into())
                        } else {
                            Tag::I(label.into())
                        });
                    }
                } else {
                    words.push(piece.to_string());
                    tags.push(Tag::O);
                }
            }
            let sentence = Sentence::new(format!("{prefix}-{:04}", s + 1), words)
                .map_err(PipelineError::corpus("synthetic"))?
                .with_noisy(noisy);
            examples.push(Example::new(sentence, tags).map_err(PipelineError::corpus("synthetic"))?);
        }
        Ok(Dataset::new(examples))
    };

    let train = make_split("train", spec.n_train, pools[0], 0.0)?;
    let dev = make_split("dev", spec.n_dev, pools[1], 0.0)?;
    let test = make_split("test", spec.n_test, pools[2], spec.noise_rate)?;
    Ok(SyntheticCorpus { train, dev, test, kb })
}
