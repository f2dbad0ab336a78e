// Wire types for the session service JSON API.
export {};
