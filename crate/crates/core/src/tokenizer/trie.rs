#[derive(Debug, Clone, Default)]
struct Node {
    /// Sorted by character; fan-out is small so a binary search beats hashing.
    children: Vec<(char, usize)>,
    token: Option<u32>,
}

impl Node {
    fn child(&self, c: char) -> Option<usize> {
        self.children
            .binary_search_by_key(&c, |&(k, _)| k)
            .ok()
            .map(|i| self.children[i].1)
    }
}

/// Character trie mapping piece strings to token ids, used for
/// longest-prefix lookup during greedy segmentation.
#[derive(Debug, Clone)]
pub(crate) struct Trie {
    nodes: Vec<Node>,
}

impl Default for Trie {
    fn default() -> Self {
        Self {
            nodes: vec![Node::default()],
        }
    }
}

impl Trie {
    pub fn insert(&mut self, key: &str, id: u32) {
        let mut node = 0;
        for c in key.chars() {
            node = match self.nodes[node]
                .children
                .binary_search_by_key(&c, |&(k, _)| k)
            {
                Ok(i) => self.nodes[node].children[i].1,
                Err(i) => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.insert(i, (c, next));
                    next
                }
            };
        }
        self.nodes[node].token = Some(id);
    }

    /// Longest key that is a prefix of `text`, as `(length in bytes, id)`.
    pub fn longest_prefix(&self, text: &str) -> Option<(usize, u32)> {
        let mut node = 0;
        let mut best = None;
        for (i, c) in text.char_indices() {
            match self.nodes[node].child(c) {
                Some(next) => node = next,
                None => break,
            }
            if let Some(id) = self.nodes[node].token {
                best = Some((i + c.len_utf8(), id));
            }
        }
        best
    }
}
