/**
 * Grouping model behind the scatter view: an ordered list of named,
 * colored topic groups plus an undo history. A topic belongs to at most
 * one group, groups are never left empty, and export to the service's
 * cluster-definition schema requires every topic to be grouped.
 */
import type { ClusterDefinition, GroupingJSON } from "./types.js";

export interface Group {
  name: string;
  color: string;
  topicIds: number[]; // always sorted ascending
}

export const PALETTE = [
  "#4c78a8", "#f58518", "#54a24b", "#e45756",
  "#72b7b2", "#b279a2", "#eeca3b", "#9d755d",
];

function cloneGroups(groups: Group[]): Group[] {
  return groups.map((g) => ({ ...g, topicIds: [...g.topicIds] }));
}

export class GroupingState {
  groups: Group[] = [];
  private history: Group[][] = [];

  private snapshot(): void {
    this.history.push(cloneGroups(this.groups));
  }

  get historyDepth(): number {
    return this.history.length;
  }

  undo(): boolean {
    const prev = this.history.pop();
    if (!prev) return false;
    this.groups = prev;
    return true;
  }

  groupOf(topicId: number): number | null {
    for (let i = 0; i < this.groups.length; i++) {
      if (this.groups[i].topicIds.includes(topicId)) return i;
    }
    return null;
  }

  /** Remove ids from whichever groups hold them; drop emptied groups. */
  private detach(topicIds: number[]): void {
    const gone = new Set(topicIds);
    this.groups = this.groups
      .map((g) => ({ ...g, topicIds: g.topicIds.filter((t) => !gone.has(t)) }))
      .filter((g) => g.topicIds.length > 0);
  }

  private freshName(): string {
    let n = this.groups.length + 1;
    while (this.groups.some((g) => g.name === `group ${n}`)) n++;
    return `group ${n}`;
  }

  createGroup(topicIds: number[], name?: string): number {
    if (topicIds.length === 0) throw new Error("cannot create an empty group");
    this.snapshot();
    this.detach(topicIds);
    const index = this.groups.length;
    this.groups.push({
      name: name ?? this.freshName(),
      color: PALETTE[index % PALETTE.length],
      topicIds: [...new Set(topicIds)].sort((a, b) => a - b),
    });
    return index;
  }

  addToGroup(index: number, topicIds: number[]): void {
    if (index < 0 || index >= this.groups.length) {
      throw new Error(`no group at index ${index}`);
    }
    if (topicIds.length === 0) return;
    this.snapshot();
    const target = this.groups[index];
    const moved = new Set(topicIds);
    // strip the ids from every other group, dropping ones left empty
    this.groups = this.groups
      .map((g) => g === target
        ? g
        : { ...g, topicIds: g.topicIds.filter((t) => !moved.has(t)) })
      .filter((g) => g === target || g.topicIds.length > 0);
    const merged = new Set([...target.topicIds, ...topicIds]);
    target.topicIds = [...merged].sort((a, b) => a - b);
  }

  ungroup(topicIds: number[]): void {
    if (topicIds.length === 0) return;
    this.snapshot();
    this.detach(topicIds);
  }

  renameGroup(index: number, name: string): void {
    this.snapshot();
    this.groups[index].name = name;
  }

  ungroupedIds(allTopicIds: number[]): number[] {
    return allTopicIds.filter((t) => this.groupOf(t) === null);
  }

  isTotal(allTopicIds: number[]): boolean {
    return this.ungroupedIds(allTopicIds).length === 0;
  }

  /**
   * The exact cluster-definition payload the service accepts. Throws when
   * any topic is ungrouped, listing the offenders for the blocking dialog.
   */
  toDefinition(name: string, allTopicIds: number[]): ClusterDefinition {
    const missing = this.ungroupedIds(allTopicIds);
    if (missing.length > 0) {
      throw new Error(`ungrouped topics: ${missing.join(", ")}`);
    }
    const assignment = allTopicIds
      .map((t) => ({ topic_id: t, cluster: this.groupOf(t) as number }))
      .sort((a, b) => a.topic_id - b.topic_id);
    return { name, k: this.groups.length, assignment };
  }

  static fromDefinition(def: ClusterDefinition): GroupingState {
    const state = new GroupingState();
    const byCluster = new Map<number, number[]>();
    for (const entry of def.assignment) {
      const ids = byCluster.get(entry.cluster) ?? [];
      ids.push(entry.topic_id);
      byCluster.set(entry.cluster, ids);
    }
    for (let c = 0; c < def.k; c++) {
      const ids = byCluster.get(c);
      if (!ids) continue;
      state.groups.push({
        name: `group ${state.groups.length + 1}`,
        color: PALETTE[state.groups.length % PALETTE.length],
        topicIds: ids.sort((a, b) => a - b),
      });
    }
    return state;
  }

  toJSON(): GroupingJSON {
    return {
      groups: this.groups.map((g) => ({
        name: g.name,
        color: g.color,
        topic_ids: [...g.topicIds],
      })),
    };
  }

  static fromJSON(body: GroupingJSON): GroupingState {
    const state = new GroupingState();
    state.groups = (body.groups ?? []).map((g) => ({
      name: g.name,
      color: g.color,
      topicIds: [...g.topic_ids].sort((a, b) => a - b),
    }));
    return state;
  }

  equals(other: GroupingState): boolean {
    if (this.groups.length !== other.groups.length) return false;
    return this.groups.every((g, i) => {
      const o = other.groups[i];
      return g.name === o.name && g.color === o.color &&
        g.topicIds.length === o.topicIds.length &&
        g.topicIds.every((t, j) => t === o.topicIds[j]);
    });
  }
}
