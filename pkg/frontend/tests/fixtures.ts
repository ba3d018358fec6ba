import { CHARACTERISTICS } from '../src/types.js';
import type { LeafView, ReportView, RequirementView } from '../src/types.js';

/** Build a report from Y/N letters in canonical characteristic order;
 *  8 letters leave Conforming unassessed. */
export function reportFromLetters(requirementId: string, letters: string): ReportView {
  const verdicts: ReportView['verdicts'] = {};
  CHARACTERISTICS.forEach((characteristic, index) => {
    const letter = letters[index] ?? 'N';
    verdicts[characteristic] = {
      fulfilled: letter === 'Y',
      detail: `recorded ${characteristic}`,
    };
  });
  return {
    requirement_id: requirementId,
    backend_id: 'recorded',
    assessed: CHARACTERISTICS.slice(0, letters.length) as unknown as string[],
    verdicts,
  };
}

export function requirement(
  id: string,
  text: string,
  parentId: string | null = null,
): RequirementView {
  return {
    id,
    text,
    origin: parentId ? 'framework_rewrite' : 'authored',
    parent_id: parentId,
    split_index: null,
  };
}

export const INVENTORY_ORIGINAL =
  'The system must allow the inventory manager to generate a list of missing products.';

export const INVENTORY_REWRITE =
  'When the inventory manager or authorized personnel request a missing products list, ' +
  'the system shall generate a report that includes out-of-stock items and products ' +
  'below a predefined threshold, providing details such as product name, current ' +
  'quantity, supplier, and recommended reorder date.';

/** The recorded original -> framework-rewrite pair (scores 62.5 -> 87.5). */
export function inventoryLeaf(): LeafView {
  return {
    requirement: requirement('leaf1', INVENTORY_REWRITE, 'root1'),
    score: 87.5,
    gate_passed: false,
    pattern_id: 'F2',
    report: reportFromLetters('leaf1', 'YYYYNYYY'),
    parent: {
      requirement: requirement('root1', INVENTORY_ORIGINAL),
      score: 62.5,
      report: reportFromLetters('root1', 'YYNNYYNY'),
    },
  };
}
