// Error taxonomy for the converters. Callers map these to exit codes:
// missing inputs and bad invocations are recoverable by the user (2),
// unreadable or inconsistent inputs are data problems (3).

export class UsageError extends Error {}

export class SourceMissingError extends Error {}

export class SourceFormatError extends Error {}
