import { CHARACTERISTICS } from './types.js';
import type { LeafView, PendingQuestion, SessionSummary } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
    .replaceAll("'", '&#39;');
}

export function formatScore(score: number | null): string {
  return score === null ? '?' : score.toFixed(1);
}

/** Pending questions grouped by their target characteristic, canonical order. */
export function groupByTarget(questions: PendingQuestion[]): [string, PendingQuestion[]][] {
  const groups = new Map<string, PendingQuestion[]>();
  for (const question of questions) {
    const bucket = groups.get(question.target);
    if (bucket) bucket.push(question);
    else groups.set(question.target, [question]);
  }
  const ordered: [string, PendingQuestion[]][] = [];
  for (const characteristic of CHARACTERISTICS) {
    const bucket = groups.get(characteristic);
    if (bucket) {
      ordered.push([characteristic, bucket]);
      groups.delete(characteristic);
    }
  }
  for (const [target, bucket] of groups) ordered.push([target, bucket]);
  return ordered;
}

export interface Badge {
  characteristic: string;
  state: 'ok' | 'bad' | 'na';
  detail: string;
}

/** One badge per characteristic for a leaf's latest report. */
export function badgeRow(leaf: LeafView): Badge[] {
  return CHARACTERISTICS.map((characteristic) => {
    const report = leaf.report;
    if (!report || !report.assessed.includes(characteristic)) {
      return { characteristic, state: 'na' as const, detail: 'not assessed' };
    }
    const verdict = report.verdicts[characteristic];
    if (!verdict) return { characteristic, state: 'na' as const, detail: 'not assessed' };
    return {
      characteristic,
      state: verdict.fulfilled ? ('ok' as const) : ('bad' as const),
      detail: verdict.detail,
    };
  });
}

export interface LineageNode {
  id: string;
  text: string;
  patternId: string | null;
  splitIndex: number | null;
  depth: number;
}

/** Root-to-leaf chains derived from parent links in the summary. */
export function lineage(summary: SessionSummary): LineageNode[] {
  const nodes: LineageNode[] = [
    {
      id: summary.root.id,
      text: summary.root.text,
      patternId: null,
      splitIndex: null,
      depth: 0,
    },
  ];
  for (const leaf of summary.leaves) {
    if (leaf.requirement.id === summary.root.id) continue;
    const depth = leaf.requirement.parent_id === summary.root.id ? 1 : 2;
    nodes.push({
      id: leaf.requirement.id,
      text: leaf.requirement.text,
      patternId: leaf.pattern_id,
      splitIndex: leaf.requirement.split_index,
      depth,
    });
  }
  return nodes;
}

export function statusLabel(summary: SessionSummary): string {
  return `${summary.status} (iteration ${summary.iterations_completed}/${summary.max_iterations})`;
}
