/**
 * Query form validation, mirroring the server's 400 conditions: every
 * one of the five filter fields must be present and non-blank before a
 * request goes out.
 */

export const MISSING_FIELDS_MESSAGE = "All fields must be filled out";

export interface QueryFormFields {
  age_min: string;
  age_max: string;
  activity: string;
  from: string;
  to: string;
}

export type ValidationResult =
  | { ok: true; params: QueryFormFields }
  | { ok: false; message: string };

export const REQUIRED_FIELDS: (keyof QueryFormFields)[] = [
  "age_min",
  "age_max",
  "activity",
  "from",
  "to",
];

export function validateQueryForm(
  fields: Partial<QueryFormFields>,
): ValidationResult {
  for (const name of REQUIRED_FIELDS) {
    const value = fields[name];
    if (value === undefined || value.trim() === "") {
      return { ok: false, message: MISSING_FIELDS_MESSAGE };
    }
  }
  return { ok: true, params: fields as QueryFormFields };
}
