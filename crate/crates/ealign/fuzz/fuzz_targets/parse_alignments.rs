#![no_main]

use libfuzzer_sys::fuzz_target;

use ealign::kg::{parse_alignments, parse_triples, KnowledgeGraphPair};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    // First section defines both graphs, second the alignment lines.
    let (graph_part, align_part) = match src.split_once('\n') {
        Some((first, rest)) => (first.to_string() + "\n", rest),
        None => return,
    };
    let Ok((left, _)) = parse_triples(&graph_part, "fuzz-left") else {
        return;
    };
    let Ok((right, _)) = parse_triples(&graph_part, "fuzz-right") else {
        return;
    };
    let pair = KnowledgeGraphPair { left, right };
    if let Ok(pairs) = parse_alignments(align_part, &pair, "fuzz") {
        for &(l, r) in &pairs {
            assert!(l < pair.left.num_entities());
            assert!(r < pair.right.num_entities());
        }
    }
});
