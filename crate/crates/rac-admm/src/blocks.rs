//! Block composition engine: random assembly of variables into near-equal
//! groups, exhaustive enumeration for small problems, super-variables that
//! are never split, and a greedy structure detector that proposes groups
//! from the constraint matrix pattern.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Error;
use crate::problem::SparseMatrix;
use crate::Result;

/// Hard cap for exhaustive partition enumeration.
pub const ENUMERATION_CAP: u128 = 10_000;

/// A partition of {0..n-1} into groups, listed in update order. Group
/// contents are kept sorted; the order of groups is the order blocks are
/// visited in a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockPartition {
    groups: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn new(groups: Vec<Vec<usize>>) -> Self {
        let mut groups = groups;
        for g in &mut groups {
            g.sort_unstable();
        }
        BlockPartition { groups }
    }

    /// Fixed partition into consecutive near-equal chunks: the canonical
    /// "variables in order" composition used by the non-randomized sweeps.
    pub fn chunked(n: usize, p: usize) -> Self {
        let mut groups = Vec::with_capacity(p);
        let base = n / p;
        let rem = n % p;
        let mut next = 0usize;
        for k in 0..p {
            let size = base + usize::from(k < rem);
            groups.push((next..next + size).collect());
            next += size;
        }
        BlockPartition { groups }
    }

    pub fn p(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    /// Total number of indices covered.
    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Groups reordered by an update order (for sweeps that fix the
    /// partition but randomize the visiting sequence).
    pub fn reordered(&self, order: &UpdateOrder) -> BlockPartition {
        BlockPartition {
            groups: order.0.iter().map(|&k| self.groups[k].clone()).collect(),
        }
    }

    /// Partition as an order-free set: groups sorted by first element.
    pub fn canonical_key(&self) -> Vec<Vec<usize>> {
        let mut key = self.groups.clone();
        key.sort_unstable_by_key(|g| g.first().copied());
        key
    }

    /// Check the partition covers {0..n-1} exactly once.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        let mut total = 0usize;
        for g in &self.groups {
            for &i in g {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
                total += 1;
            }
        }
        total == n
    }
}

/// A permutation of group indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateOrder(pub Vec<usize>);

impl UpdateOrder {
    pub fn identity(p: usize) -> Self {
        UpdateOrder((0..p).collect())
    }

    pub fn random(p: usize, rng: &mut impl Rng) -> Self {
        let mut idx: Vec<usize> = (0..p).collect();
        idx.shuffle(rng);
        UpdateOrder(idx)
    }
}

/// Indices pre-grouped into atoms that random assembly must keep together,
/// plus the residual columns shared between groups (each of which stays its
/// own singleton atom).
#[derive(Debug, Clone, Default)]
pub struct SuperVariableSet {
    pub supers: Vec<Vec<usize>>,
    pub shared: Vec<usize>,
}

impl SuperVariableSet {
    pub fn new(supers: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for g in &supers {
            for &i in g {
                if !seen.insert(i) {
                    return Err(Error::InvalidArgument(format!(
                        "index {} appears in more than one super-variable",
                        i
                    )));
                }
            }
        }
        Ok(SuperVariableSet {
            supers,
            shared: Vec::new(),
        })
    }

    /// No usable grouping was found: everything shared or a single group.
    pub fn is_degenerate(&self) -> bool {
        self.supers.len() <= 1
    }

    /// Number of atoms for an n-variable problem: each super-variable is one
    /// atom, every uncovered index a singleton.
    pub fn atom_count(&self, n: usize) -> usize {
        let covered: usize = self.supers.iter().map(Vec::len).sum();
        self.supers.len() + n - covered
    }
}

/// Uniform random assembly of {0..n-1} into p near-equal groups: shuffle all
/// atoms, then chunk. With super-variables, atoms are the supers plus
/// singletons for uncovered indices, and chunking balances atom counts (so
/// group sizes in variables may differ by more than one).
pub fn random_partition(
    n: usize,
    p: usize,
    rng: &mut impl Rng,
    supers: Option<&SuperVariableSet>,
) -> Result<BlockPartition> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let mut atoms: Vec<Vec<usize>> = match supers {
        None => (0..n).map(|i| vec![i]).collect(),
        Some(sv) => {
            let mut covered = vec![false; n];
            let mut atoms: Vec<Vec<usize>> = Vec::new();
            for g in &sv.supers {
                for &i in g {
                    if i >= n {
                        return Err(Error::InvalidArgument(format!(
                            "super-variable index {} out of range for n = {}",
                            i, n
                        )));
                    }
                    covered[i] = true;
                }
                if !g.is_empty() {
                    atoms.push(g.clone());
                }
            }
            atoms.extend((0..n).filter(|&i| !covered[i]).map(|i| vec![i]));
            atoms
        }
    };
    if p > atoms.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot form {} groups from {} atoms",
            p,
            atoms.len()
        )));
    }
    atoms.shuffle(rng);
    let base = atoms.len() / p;
    let rem = atoms.len() % p;
    let mut groups = Vec::with_capacity(p);
    let mut next = 0usize;
    for k in 0..p {
        let take = base + usize::from(k < rem);
        let mut g: Vec<usize> = atoms[next..next + take].iter().flatten().copied().collect();
        g.sort_unstable();
        groups.push(g);
        next += take;
    }
    Ok(BlockPartition { groups })
}

fn binomial_u128(a: u128, b: u128) -> Result<u128> {
    let b = b.min(a - b.min(a));
    let mut c: u128 = 1;
    for i in 1..=b {
        c = c
            .checked_mul(a - b + i)
            .ok_or_else(|| Error::Overflow(format!("binomial({}, {})", a, b)))?
            / i;
    }
    Ok(c)
}

/// Number of ways to split n variables into p unordered groups of equal size
/// s = n/p: n! / ((s!)^p p!).
pub fn count_partitions(n: usize, p: usize) -> Result<u128> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidArgument("n and p must be at least 1".into()));
    }
    if n % p != 0 {
        return Err(Error::InvalidArgument(format!(
            "equal-size counting requires p | n, got n = {}, p = {}",
            n, p
        )));
    }
    let s = (n / p) as u128;
    let mut total: u128 = 1;
    let mut remaining = n as u128;
    while remaining > 0 {
        // Anchor the lowest remaining index, choose its s-1 companions.
        let ways = binomial_u128(remaining - 1, s - 1)?;
        total = total
            .checked_mul(ways)
            .ok_or_else(|| Error::Overflow(format!("count_partitions({}, {})", n, p)))?;
        remaining -= s;
    }
    Ok(total)
}

/// Number of update combinations when both the grouping and the sweep order
/// vary: count_partitions(n, p) * p!.
pub fn count_ordered_combinations(n: usize, p: usize) -> Result<u128> {
    let mut total = count_partitions(n, p)?;
    for k in 1..=(p as u128) {
        total = total
            .checked_mul(k)
            .ok_or_else(|| Error::Overflow(format!("ordered combinations ({}, {})", n, p)))?;
    }
    Ok(total)
}

/// All equal-size partitions in canonical order: each group ascending,
/// groups ordered by first element, partitions in lexicographic order.
pub fn enumerate_partitions(n: usize, p: usize) -> Result<Vec<BlockPartition>> {
    let count = count_partitions(n, p)?;
    if count > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "{} partitions exceed the enumeration cap of {}",
            count, ENUMERATION_CAP
        )));
    }
    let s = n / p;
    let mut out = Vec::with_capacity(count as usize);
    let mut free: Vec<usize> = (0..n).collect();
    let mut current: Vec<Vec<usize>> = Vec::with_capacity(p);
    recurse_partitions(&mut free, s, &mut current, &mut out);
    Ok(out)
}

fn recurse_partitions(
    free: &mut Vec<usize>,
    s: usize,
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<BlockPartition>,
) {
    if free.is_empty() {
        out.push(BlockPartition {
            groups: current.clone(),
        });
        return;
    }
    // The lowest free index anchors the next group; enumerate its s-1
    // companions in lexicographic order.
    let anchor = free[0];
    let rest: Vec<usize> = free[1..].to_vec();
    let mut comb: Vec<usize> = (0..s - 1).collect();
    loop {
        let mut group = Vec::with_capacity(s);
        group.push(anchor);
        group.extend(comb.iter().map(|&i| rest[i]));
        let mut remaining: Vec<usize> = Vec::with_capacity(rest.len() + 1 - s);
        let mut c = 0usize;
        for (i, &v) in rest.iter().enumerate() {
            if c < comb.len() && comb[c] == i {
                c += 1;
            } else {
                remaining.push(v);
            }
        }
        current.push(group);
        recurse_partitions(&mut remaining, s, current, out);
        current.pop();

        // Next lexicographic (s-1)-combination of rest's indices.
        if s == 1 {
            break;
        }
        let k = comb.len();
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if comb[i] != i + rest.len() - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        comb[i] += 1;
        for j in i + 1..k {
            comb[j] = comb[j - 1] + 1;
        }
    }
}

/// Propose super-variables from the constraint pattern: grow column groups
/// by breadth-first search through shared rows, balanced to roughly
/// n / target_groups columns each, then pull every column of a row that
/// spans several groups into the shared set.
pub fn detect_structure(a: &SparseMatrix, target_groups: usize) -> SuperVariableSet {
    let n = a.ncols();
    let m = a.nrows();
    if n == 0 || target_groups == 0 {
        return SuperVariableSet::default();
    }
    let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j, v) in a.entries() {
        if v != 0.0 {
            row_cols[i].push(j);
            col_rows[j].push(i);
        }
    }
    for r in &mut row_cols {
        r.sort_unstable();
        r.dedup();
    }
    for c in &mut col_rows {
        c.sort_unstable();
        c.dedup();
    }

    let target = n.div_ceil(target_groups);
    let mut group_of = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cursor = 0usize;
    while let Some(seed) = (cursor..n).find(|&c| group_of[c] == usize::MAX) {
        cursor = seed;
        let gid = groups.len();
        let mut group = vec![seed];
        group_of[seed] = gid;
        let mut frontier = std::collections::BTreeSet::new();
        let mut head = 0usize;
        while group.len() < target {
            // Expand the frontier from columns added since the last pass.
            while head < group.len() {
                let c = group[head];
                head += 1;
                for &r in &col_rows[c] {
                    for &c2 in &row_cols[r] {
                        if group_of[c2] == usize::MAX {
                            frontier.insert(c2);
                        }
                    }
                }
            }
            match frontier.iter().next().copied() {
                Some(c) => {
                    frontier.remove(&c);
                    if group_of[c] == usize::MAX {
                        group_of[c] = gid;
                        group.push(c);
                    }
                }
                None => break,
            }
        }
        group.sort_unstable();
        groups.push(group);
    }

    // Shared columns: everything in a row spanning at least two groups.
    let mut shared = vec![false; n];
    for cols in &row_cols {
        let mut first = usize::MAX;
        let mut multi = false;
        for &c in cols {
            if first == usize::MAX {
                first = group_of[c];
            } else if group_of[c] != first {
                multi = true;
                break;
            }
        }
        if multi {
            for &c in cols {
                shared[c] = true;
            }
        }
    }
    let supers: Vec<Vec<usize>> = groups
        .into_iter()
        .map(|g| g.into_iter().filter(|&c| !shared[c]).collect::<Vec<_>>())
        .filter(|g: &Vec<usize>| !g.is_empty())
        .collect();
    SuperVariableSet {
        supers,
        shared: (0..n).filter(|&c| shared[c]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn near_equal_sizes() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let p63 = random_partition(6, 3, &mut rng, None).unwrap();
        assert!(p63.is_partition_of(6));
        assert!(p63.groups().iter().all(|g| g.len() == 2));
        let p52 = random_partition(5, 2, &mut rng, None).unwrap();
        assert!(p52.is_partition_of(5));
        let mut sizes: Vec<usize> = p52.groups().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn supers_forced_atomic() {
        let sv = SuperVariableSet::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let part = random_partition(4, 2, &mut rng, Some(&sv)).unwrap();
            let mut key = part.canonical_key();
            key.sort();
            assert_eq!(key, vec![vec![0, 1], vec![2, 3]]);
        }
    }

    #[test]
    fn supers_overlap_rejected() {
        assert!(SuperVariableSet::new(vec![vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn too_many_groups_for_atoms() {
        let sv = SuperVariableSet::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(random_partition(4, 3, &mut rng, Some(&sv)).is_err());
    }

    #[test]
    fn counts_match_formula() {
        assert_eq!(count_partitions(6, 3).unwrap(), 15);
        assert_eq!(count_partitions(4, 2).unwrap(), 3);
        assert_eq!(count_partitions(9, 1).unwrap(), 1);
        assert_eq!(count_partitions(2, 2).unwrap(), 1);
        assert!(count_partitions(5, 2).is_err());
        assert_eq!(count_ordered_combinations(6, 3).unwrap(), 90);
    }

    #[test]
    fn count_overflow_reported() {
        match count_partitions(80, 40) {
            Err(Error::Overflow(_)) => {}
            other => panic!("expected overflow, got {:?}", other),
        }
    }

    #[test]
    fn enumeration_canonical_and_complete() {
        let parts = enumerate_partitions(6, 3).unwrap();
        assert_eq!(parts.len(), 15);
        for part in &parts {
            assert!(part.is_partition_of(6));
            for g in part.groups() {
                assert!(g.windows(2).all(|w| w[0] < w[1]));
            }
            let firsts: Vec<usize> = part.groups().iter().map(|g| g[0]).collect();
            assert!(firsts.windows(2).all(|w| w[0] < w[1]));
        }
        let mut keys: Vec<_> = parts.iter().map(|p| p.canonical_key()).collect();
        keys.dedup();
        assert_eq!(keys.len(), 15);

        let single = enumerate_partitions(2, 2).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].groups(), &[vec![0], vec![1]]);

        let four = enumerate_partitions(4, 2).unwrap();
        let keys: Vec<_> = four.iter().map(|p| p.canonical_key()).collect();
        assert_eq!(
            keys,
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0, 2], vec![1, 3]],
                vec![vec![0, 3], vec![1, 2]],
            ]
        );
    }

    #[test]
    fn enumeration_cap_enforced() {
        // 12!/(2!^6 6!) = 10395 > 10000.
        match enumerate_partitions(12, 6) {
            Err(Error::CapExceeded(_)) => {}
            other => panic!("expected cap error, got {:?}", other.map(|v| v.len())),
        }
    }

    #[test]
    fn sampling_frequencies_near_uniform() {
        let mut rng = ChaCha12Rng::seed_from_u64(20240915);
        let mut counts: std::collections::HashMap<Vec<Vec<usize>>, usize> =
            std::collections::HashMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            let part = random_partition(6, 3, &mut rng, None).unwrap();
            *counts.entry(part.canonical_key()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 15);
        let expect = draws as f64 / 15.0;
        for (key, c) in &counts {
            let dev = (*c as f64 - expect).abs() / expect;
            assert!(dev < 0.3, "partition {:?} seen {} times", key, c);
        }
    }

    #[test]
    fn chunked_partition_layout() {
        let part = BlockPartition::chunked(7, 3);
        assert_eq!(part.groups(), &[vec![0, 1, 2], vec![3, 4], vec![5, 6]]);
        assert!(part.is_partition_of(7));
    }

    #[test]
    fn reorder_applies_permutation() {
        let part = BlockPartition::chunked(6, 3);
        let order = UpdateOrder(vec![2, 0, 1]);
        let r = part.reordered(&order);
        assert_eq!(r.groups(), &[vec![4, 5], vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn detect_block_diagonal() {
        // Two 3-column blocks, three rows each.
        let mut t = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                t.push((r, c, 1.0));
            }
        }
        for r in 3..6 {
            for c in 3..6 {
                t.push((r, c, 1.0));
            }
        }
        let a = SparseMatrix::from_triplets(6, 6, t).unwrap();
        let sv = detect_structure(&a, 2);
        assert_eq!(sv.supers, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(sv.shared.is_empty());
        assert!(!sv.is_degenerate());
    }

    #[test]
    fn detect_dense_degenerate() {
        let mut t = Vec::new();
        for r in 0..4 {
            for c in 0..6 {
                t.push((r, c, 1.0));
            }
        }
        let a = SparseMatrix::from_triplets(4, 6, t).unwrap();
        let sv = detect_structure(&a, 2);
        assert!(sv.is_degenerate());
        assert_eq!(sv.shared, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn detect_arrow_coupling() {
        // Block on {0,1,2}, block on {3,4,5}, one row coupling columns 2,3.
        let mut t = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                t.push((r, c, 1.0));
            }
        }
        for r in 3..6 {
            for c in 3..6 {
                t.push((r, c, 1.0));
            }
        }
        t.push((6, 2, 1.0));
        t.push((6, 3, 1.0));
        let a = SparseMatrix::from_triplets(7, 6, t).unwrap();
        let sv = detect_structure(&a, 2);
        assert_eq!(sv.shared, vec![2, 3]);
        assert_eq!(sv.supers, vec![vec![0, 1], vec![4, 5]]);
    }
}
