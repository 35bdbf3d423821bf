use std::collections::BTreeSet;

use crate::evidence::ContentCategory;
use crate::llm::{task_header, LlmClient, LlmError, TASK_TAG};

const LEXICON: &[(ContentCategory, &[&str])] = &[
    (
        ContentCategory::People,
        &[
            "person", "people", "man", "men", "woman", "women", "boy", "girl", "child", "children", "kid", "kids",
            "baby", "dancer", "chef", "soldier", "crowd", "family", "astronaut", "player", "worker", "student",
        ],
    ),
    (
        ContentCategory::Animals,
        &[
            "dog", "dogs", "puppy", "cat", "cats", "kitten", "bird", "birds", "horse", "fish", "lion", "tiger",
            "elephant", "bear", "rabbit", "fox", "wolf", "deer", "dragon", "butterfly", "owl", "whale", "monkey",
        ],
    ),
    (
        ContentCategory::Vehicles,
        &[
            "car", "cars", "truck", "bus", "train", "bicycle", "bike", "motorcycle", "boat", "ship", "plane",
            "airplane", "helicopter", "rocket", "spaceship", "tram", "taxi", "van",
        ],
    ),
    (
        ContentCategory::Plants,
        &[
            "tree", "trees", "flower", "flowers", "grass", "forest", "leaf", "leaves", "plant", "plants", "garden",
            "rose", "bamboo", "moss", "vine", "cactus", "blossom",
        ],
    ),
    (
        ContentCategory::Artifacts,
        &[
            "robot", "phone", "computer", "lamp", "chair", "table", "book", "clock", "sword", "guitar", "piano",
            "camera", "cup", "bottle", "toy", "umbrella", "hat", "statue",
        ],
    ),
    (
        ContentCategory::Food,
        &[
            "food", "bread", "cake", "pizza", "apple", "fruit", "soup", "coffee", "tea", "noodles", "sushi",
            "burger", "cheese", "chocolate", "eating", "meal", "dessert", "wine",
        ],
    ),
    (
        ContentCategory::Buildings,
        &[
            "building", "buildings", "house", "castle", "tower", "city", "skyscraper", "temple", "church",
            "bridge", "palace", "street", "village", "cabin", "room", "kitchen",
        ],
    ),
    (
        ContentCategory::Scenery,
        &[
            "mountain", "mountains", "ocean", "sea", "beach", "sky", "sunset", "sunrise", "river", "lake", "desert",
            "snow", "waterfall", "clouds", "landscape", "valley", "waves", "galaxy",
        ],
    ),
];

/// Keyword lookup used by the offline tagger. May return an empty set.
pub fn lexicon_labels(text: &str) -> BTreeSet<ContentCategory> {
    let words: BTreeSet<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    LEXICON
        .iter()
        .filter(|(_, keys)| keys.iter().any(|k| words.contains(*k)))
        .map(|(cat, _)| *cat)
        .collect()
}

pub fn build_tag_request(text: &str) -> String {
    let mut req = task_header(TASK_TAG);
    req.push_str("Label the video prompt below with every content category it depicts.\n");
    req.push_str("Reply with a comma-separated list drawn from: ");
    req.push_str(&ContentCategory::ALL.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "));
    req.push('\n');
    req.push_str("prompt: ");
    req.push_str(&text.replace('\n', " "));
    req.push('\n');
    req
}

/// Asks the client for labels; unknown names in the reply are ignored and an
/// empty result falls back to Scenery.
pub fn tag_content_categories(text: &str, client: &dyn LlmClient) -> Result<BTreeSet<ContentCategory>, LlmError> {
    let reply = client.complete(&build_tag_request(text))?;
    let mut labels: BTreeSet<ContentCategory> =
        reply.split([',', '\n', ';']).filter_map(ContentCategory::from_name).collect();
    if labels.is_empty() {
        labels.insert(ContentCategory::Scenery);
    }
    Ok(labels)
}
