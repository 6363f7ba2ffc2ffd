//! Multi-indices, support sets and monotone index sets.

use tensorsplit::index::{all_subsets, idx, IndexSet, IndexVector, SupportSet};

fn main() {
    let j = idx([(1, 2), (4, 1)]);
    println!("j = {j}, |j|_0 = {}, |j|_1 = {}, support = {}", j.l0(), j.l1(), j.support());
    println!("JSON: {}", serde_json::to_string(&j).unwrap());
    let back: IndexVector = serde_json::from_str(r#"{"4": 1, "1": 2}"#).unwrap();
    assert_eq!(back, j);

    let below = j.lower_set();
    println!("{} indices lie below {j}:", below.len());
    for i in &below {
        println!("  {i}");
    }

    let mut set: IndexSet = [idx([(1, 2)]), idx([(2, 1), (3, 1)])].into_iter().collect();
    println!("monotone before closure: {}", set.is_monotone());
    set = set.downward_closure();
    println!("closure has {} members, monotone: {}", set.len(), set.is_monotone());
    println!("restricted to d = 2: {:?}", set.restrict(2));

    let omega = SupportSet::new([1, 3]).unwrap();
    println!("subsets of {omega}: {:?}", omega.subsets());
    println!("all support sets in 3 coordinates: {:?}", all_subsets(3));
}
