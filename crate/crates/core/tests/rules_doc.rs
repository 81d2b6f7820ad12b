use std::path::PathBuf;

use inq_core::analysis::Analyses;
use inq_core::lang::parse;
use inq_core::smells::{detect, RuleId};

fn sections() -> Vec<(RuleId, Vec<String>)> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/rules.md");
    let text = std::fs::read_to_string(path).unwrap();
    let mut out: Vec<(RuleId, Vec<String>)> = Vec::new();
    let mut block: Option<String> = None;
    for line in text.lines() {
        if let Some(title) = line.strip_prefix("## ") {
            out.push((RuleId::parse(&title[..3]).unwrap(), Vec::new()));
        } else if line == "```nvl" {
            block = Some(String::new());
        } else if line == "```" {
            out.last_mut().unwrap().1.push(block.take().unwrap());
        } else if let Some(b) = block.as_mut() {
            b.push_str(line);
            b.push('\n');
        }
    }
    out
}

#[test]
fn every_rule_has_a_trigger_and_a_near_miss() {
    let sections = sections();
    assert_eq!(sections.iter().map(|s| s.0).collect::<Vec<_>>(), RuleId::ALL);
    for (rule, blocks) in sections {
        assert_eq!(blocks.len(), 2, "{rule}");
        let fired = |src: &str| {
            let a = Analyses::new(&parse(src).unwrap_or_else(|e| panic!("{rule}: {e:?}")));
            detect(&a).into_iter().map(|d| d.rule_id).collect::<Vec<_>>()
        };
        assert!(fired(&blocks[0]).contains(&rule), "{rule} trigger: {:?}", fired(&blocks[0]));
        assert!(!fired(&blocks[1]).contains(&rule), "{rule} near miss: {:?}", fired(&blocks[1]));
    }
}
