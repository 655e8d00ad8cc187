// Hand-built projection payloads shaped exactly like the service JSON.

import type { Glyph, TopicProjection } from "../src/types.js";

export function makeGlyph(
  topicId: number,
  runId: number,
  topicIndex: number,
  associationCount: number,
  words?: Glyph["words"],
): Glyph {
  return {
    topic_id: topicId,
    run_id: runId,
    topic_index: topicIndex,
    association_count: associationCount,
    words: words ?? [
      { word: `w${topicId}a`, word_id: topicId * 10, probability: 0.4, word_class: "action" },
      { word: `w${topicId}b`, word_id: topicId * 10 + 1, probability: 0.25, word_class: "resource" },
      { word: `w${topicId}c`, word_id: topicId * 10 + 2, probability: 0.1, word_class: "unlabeled" },
    ],
  };
}

/**
 * Five topics from two runs: run 0 contributed three topics clustered on the
 * left of the projection, run 1 two topics on the right.  The co-association
 * matrix links pairs (0,3), (1,4), and (2,3).
 */
export function fiveTopicProjection(): TopicProjection {
  return {
    coords: [
      [0.0, 0.0],
      [0.0, 1.0],
      [1.0, 0.0],
      [10.0, 10.0],
      [11.0, 9.0],
    ],
    glyphs: [
      makeGlyph(0, 0, 0, 10),
      makeGlyph(1, 0, 1, 6),
      makeGlyph(2, 0, 2, 4),
      makeGlyph(3, 1, 0, 12),
      makeGlyph(4, 1, 1, 5),
    ],
    chord: [
      [0, 0, 0, 7, 0],
      [0, 0, 0, 0, 3],
      [0, 0, 0, 2, 0],
      [7, 0, 2, 0, 0],
      [0, 3, 0, 0, 0],
    ],
    topics: [
      { id: 0, run_id: 0, topic_index: 0 },
      { id: 1, run_id: 0, topic_index: 1 },
      { id: 2, run_id: 0, topic_index: 2 },
      { id: 3, run_id: 1, topic_index: 0 },
      { id: 4, run_id: 1, topic_index: 1 },
    ],
    runs: [
      { run_id: 0, num_topics: 3, alpha: 0.1, beta: 0.01, iterations: 50, burn_in: 10, seed: 0 },
      { run_id: 1, num_topics: 2, alpha: 0.1, beta: 0.01, iterations: 50, burn_in: 10, seed: 1 },
    ],
    fold_iterations: 100,
  };
}
