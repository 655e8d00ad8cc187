import { describe, expect, it } from "vitest";

import { GroupingState, PALETTE } from "../src/grouping.js";

const ALL = [0, 1, 2, 3, 4];

describe("export and re-import", () => {
  it("[SECONDARY] round-trips a 5-topic 2-run grouping through the cluster definition", () => {
    const state = new GroupingState();
    state.createGroup([0, 2, 3]);
    state.createGroup([1, 4]);

    const def = state.toDefinition("round trip", ALL);
    expect(def.k).toBe(2);
    expect(def.assignment).toEqual([
      { topic_id: 0, cluster: 0 },
      { topic_id: 1, cluster: 1 },
      { topic_id: 2, cluster: 0 },
      { topic_id: 3, cluster: 0 },
      { topic_id: 4, cluster: 1 },
    ]);

    const back = GroupingState.fromDefinition(def);
    expect(back.equals(state)).toBe(true);
    expect(state.equals(back)).toBe(true);
    // and the definition itself is stable under another round trip
    expect(back.toDefinition("round trip", ALL)).toEqual(def);
  });

  it("[SECONDARY] blocks export while any topic is ungrouped, listing the offenders", () => {
    const state = new GroupingState();
    state.createGroup([0, 2]);
    expect(state.isTotal(ALL)).toBe(false);
    expect(() => state.toDefinition("partial", ALL)).toThrowError("ungrouped topics: 1, 3, 4");

    state.createGroup([1, 3]);
    expect(() => state.toDefinition("partial", ALL)).toThrowError("ungrouped topics: 4");

    state.addToGroup(1, [4]);
    expect(state.isTotal(ALL)).toBe(true);
    const def = state.toDefinition("total", ALL);
    expect(def.assignment).toHaveLength(5);
  });
});

describe("membership rules", () => {
  it("keeps each topic in at most one group", () => {
    const state = new GroupingState();
    state.createGroup([0, 1, 2]);
    state.createGroup([2, 3]);
    expect(state.groups[0].topicIds).toEqual([0, 1]);
    expect(state.groups[1].topicIds).toEqual([2, 3]);
    expect(state.groupOf(2)).toBe(1);
  });

  it("drops a group once its last member moves away", () => {
    const state = new GroupingState();
    state.createGroup([0]);
    state.createGroup([1, 2]);
    state.addToGroup(1, [0]);
    expect(state.groups).toHaveLength(1);
    expect(state.groups[0].topicIds).toEqual([0, 1, 2]);
  });

  it("sorts and deduplicates ids on creation", () => {
    const state = new GroupingState();
    state.createGroup([4, 1, 4, 0]);
    expect(state.groups[0].topicIds).toEqual([0, 1, 4]);
  });

  it("refuses an empty group", () => {
    const state = new GroupingState();
    expect(() => state.createGroup([])).toThrowError("cannot create an empty group");
  });

  it("ungroups topics and drops emptied groups", () => {
    const state = new GroupingState();
    state.createGroup([0, 1]);
    state.createGroup([2]);
    state.ungroup([2, 1]);
    expect(state.groups).toHaveLength(1);
    expect(state.groups[0].topicIds).toEqual([0]);
    expect(state.ungroupedIds(ALL)).toEqual([1, 2, 3, 4]);
  });

  it("never reuses a default name after deletions", () => {
    const state = new GroupingState();
    state.createGroup([0]);
    state.createGroup([1]);
    state.ungroup([0]);
    state.createGroup([2]);
    const names = state.groups.map((g) => g.name);
    expect(new Set(names).size).toBe(names.length);
  });
});

describe("undo", () => {
  it("restores the previous grouping one step at a time", () => {
    const state = new GroupingState();
    state.createGroup([0, 1]);
    state.createGroup([2]);
    state.addToGroup(0, [2]);
    expect(state.historyDepth).toBe(3);

    expect(state.undo()).toBe(true);
    expect(state.groups).toHaveLength(2);
    expect(state.groups[1].topicIds).toEqual([2]);

    expect(state.undo()).toBe(true);
    expect(state.undo()).toBe(true);
    expect(state.groups).toHaveLength(0);
    expect(state.undo()).toBe(false);
  });

  it("undoes a rename", () => {
    const state = new GroupingState();
    state.createGroup([0], "servers");
    state.renameGroup(0, "workstations");
    expect(state.groups[0].name).toBe("workstations");
    state.undo();
    expect(state.groups[0].name).toBe("servers");
  });
});

describe("persistence shape", () => {
  it("round-trips through the stored JSON with snake_case ids", () => {
    const state = new GroupingState();
    state.createGroup([3, 1], "left");
    state.createGroup([0], "right");
    const body = state.toJSON();
    expect(body).toEqual({
      groups: [
        { name: "left", color: PALETTE[0], topic_ids: [1, 3] },
        { name: "right", color: PALETTE[1], topic_ids: [0] },
      ],
    });
    const back = GroupingState.fromJSON(body);
    expect(back.equals(state)).toBe(true);
  });

  it("treats differing membership, names, or colors as unequal", () => {
    const a = new GroupingState();
    a.createGroup([0, 1]);
    const b = new GroupingState();
    b.createGroup([0, 2]);
    expect(a.equals(b)).toBe(false);

    const c = new GroupingState();
    c.createGroup([0, 1], "other name");
    expect(a.equals(c)).toBe(false);
  });
});
