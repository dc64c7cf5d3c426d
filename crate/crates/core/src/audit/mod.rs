//! The defender: red-flag rules, the Benford first-digit test, rarity scans
//! and the harness that compares an original extract with an adversarial one.

mod benford;
mod evaluate;
mod rarity;
mod report;
mod rules;

pub use benford::{benford_expected, benford_from_amounts, benford_test, first_digit, BenfordResult, DEFAULT_CRITICAL_VALUE, MIN_AMOUNTS};
pub use evaluate::{check_manifest, evaluate_attack, total_cents, AttackEvaluation, BenfordCheck, Detectors, RarityCheck};
pub use rarity::{rarity_scan, RARITY};
pub use report::{DetectorReport, Flag};
pub use rules::{red_flag_scan, Rule, RuleSet, RED_FLAG};
