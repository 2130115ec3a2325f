#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((graph, duplicates)) = ealign::kg::parse_triples(src, "fuzz") {
        // basic consistency of the parsed graph
        assert!(graph.num_entities() > 0);
        for &(h, r, t) in graph.triples() {
            assert!(h < graph.num_entities());
            assert!(t < graph.num_entities());
            assert!(r < graph.num_relations());
        }
        let non_empty = src.lines().filter(|l| !l.is_empty()).count();
        assert_eq!(graph.triples().len() + duplicates, non_empty);
    }
});
