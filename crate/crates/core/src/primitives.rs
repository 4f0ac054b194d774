//! Catalogue of built-in methods and where they are installed.
//!
//! Each primitive names its home class (`"Foo class"` for the class side)
//! and its selector. A primitive's position in [`Prim::ALL`] is its stable
//! index, stored in the primitive slot of its CompiledMethod.

use crate::script::ast::selector_arity;

macro_rules! prims {
    ($($home:literal { $($v:ident = $sel:literal),* $(,)? })*) => {
        #[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
        pub enum Prim { $($($v,)*)* }

        impl Prim {
            pub const ALL: &'static [Prim] = &[$($(Prim::$v,)*)*];

            pub fn selector(self) -> &'static str {
                match self { $($(Prim::$v => $sel,)*)* }
            }

            /// Class (or `"Name class"` metaclass) the primitive is installed in.
            pub fn home(self) -> &'static str {
                match self { $($(Prim::$v => $home,)*)* }
            }
        }
    };
}

prims! {
    "ObjectRoot" {
        Equal = "=",
        NotEqual = "~=",
        NotIdentical = "~~",
        IdentityHash = "identityHash",
        Hash = "hash",
        Class = "class",
        Yourself = "yourself",
        IsNil = "isNil",
        NotNil = "notNil",
        IfNil = "ifNil:",
        IfNotNil = "ifNotNil:",
        IfNilIfNotNil = "ifNil:ifNotNil:",
        IfNotNilIfNil = "ifNotNil:ifNil:",
        PrintString = "printString",
        DisplayString = "displayString",
        PrintStringLimitedTo = "printStringLimitedTo:",
        Inspect = "inspect",
        BasicInspect = "basicInspect",
        InspectorClass = "inspectorClass",
        DoesNotUnderstand = "doesNotUnderstand:",
        PointersTo = "pointersTo",
        InstVarAt = "instVarAt:",
        InstVarAtPut = "instVarAt:put:",
        Become = "become:",
        BecomeForward = "becomeForward:",
        SignalError = "error:",
        Perform = "perform:",
        PerformWith = "perform:with:",
        PerformWithWith = "perform:with:with:",
        PerformWithArguments = "perform:withArguments:",
        RespondsTo = "respondsTo:",
        IsKindOf = "isKindOf:",
        IsBehavior = "isBehavior",
        IsString = "isString",
        IsSymbol = "isSymbol",
        IsInteger = "isInteger",
        Copy = "shallowCopy",
        ValueSelf = "value",
    }
    "Boolean" {
        IfTrue = "ifTrue:",
        IfFalse = "ifFalse:",
        IfTrueIfFalse = "ifTrue:ifFalse:",
        IfFalseIfTrue = "ifFalse:ifTrue:",
        And = "and:",
        Or = "or:",
        Not = "not",
        AndEager = "&",
        OrEager = "|",
    }
    "SmallInteger" {
        Add = "+",
        Sub = "-",
        Mul = "*",
        Div = "//",
        Mod = "\\\\",
        Less = "<",
        Greater = ">",
        LessEq = "<=",
        GreaterEq = ">=",
        IntEqual = "=",
        IntNotEqual = "~=",
        Max = "max:",
        Min = "min:",
        Abs = "abs",
        Negated = "negated",
        BitAnd = "bitAnd:",
        BitOr = "bitOr:",
        BitXor = "bitXor:",
        BitShift = "bitShift:",
        ToDo = "to:do:",
        TimesRepeat = "timesRepeat:",
        Between = "between:and:",
        IsZero = "isZero",
        Even = "even",
        AsString = "asString",
    }
    "String" {
        StrSize = "size",
        StrAt = "at:",
        StrConcat = ",",
        StrEqual = "=",
        StrAsSymbol = "asSymbol",
        StrAsString = "asString",
        StrIsEmpty = "isEmpty",
        StrIncludesSubstring = "includesSubstring:",
        StrReversed = "reversed",
    }
    "Symbol" {
        SymAsString = "asString",
        SymNumArgs = "numArgs",
    }
    "Array" {
        ArrSize = "size",
        ArrAt = "at:",
        ArrAtPut = "at:put:",
        ArrFirst = "first",
        ArrSecond = "second",
        ArrThird = "third",
        ArrLast = "last",
        ArrDo = "do:",
        ArrCollect = "collect:",
        ArrSelect = "select:",
        ArrInjectInto = "inject:into:",
        ArrIncludes = "includes:",
        ArrIsEmpty = "isEmpty",
        ArrEqual = "=",
    }
    "Array class" {
        ArrWith = "with:",
        ArrWithWith = "with:with:",
        ArrWithWithWith = "with:with:with:",
        ArrNew = "new:",
    }
    "BlockClosure" {
        BlockValue = "value",
        BlockValue1 = "value:",
        BlockValue2 = "value:value:",
        BlockValue3 = "value:value:value:",
        BlockValueWithArguments = "valueWithArguments:",
        BlockNumArgs = "numArgs",
        BlockWhileTrue = "whileTrue:",
        BlockWhileFalse = "whileFalse:",
        BlockWhileTrue0 = "whileTrue",
    }
    "CompiledMethod" {
        MethGetSource = "getSource",
        MethSelector = "selector",
        MethClass = "methodClass",
        MethNumArgs = "numArgs",
        MethSendsSelector = "sendsSelector:",
        MethValueWithReceiver = "valueWithReceiver:arguments:",
        MethRunWithIn = "run:with:in:",
    }
    "Message" {
        MsgSelector = "selector",
        MsgArguments = "arguments",
        MsgLookupClass = "lookupClass",
        MsgSendTo = "sendTo:",
    }
    "Interception" {
        IcMessage = "message",
        IcProxy = "proxy",
        IcReceiver = "receiver",
    }
    "Class" {
        ClsNew = "new",
        ClsBasicNew = "basicNew",
        ClsNewSized = "new:",
        ClsName = "name",
        ClsSuperclass = "superclass",
        ClsCompiledMethodAt = "compiledMethodAt:",
        ClsIncludesSelector = "includesSelector:",
        ClsSelectors = "selectors",
        ClsInstanceVariableNames = "instanceVariableNames",
        ClsInstSize = "instSize",
        ClsIsBehavior = "isBehavior",
        ClsIsClassSide = "isClassSide",
        ClsIsInstanceSide = "isInstanceSide",
        ClsInstanceSide = "instanceSide",
        ClsIsMeta = "isMeta",
        ClsPrintString = "printString",
        ClsInheritsFrom = "inheritsFrom:",
    }
    "Metaclass" {
        MetaIsClassSide = "isClassSide",
        MetaIsInstanceSide = "isInstanceSide",
        MetaInstanceSide = "instanceSide",
        MetaIsMeta = "isMeta",
    }
    "TranscriptStream" {
        Show = "show:",
        Cr = "cr",
    }
    "GhostFacade" {
        GhostProxyFor = "proxyFor:handler:",
        GhostReplace = "replace:handler:",
        GhostReplaceClass = "replaceClass:handler:",
        GhostReplaceMethod = "replaceMethod:of:handler:",
        GhostForwarder = "forwarder",
        GhostRecorder = "recorder",
        GhostDebuggingTable = "debuggingTable",
        GhostTargetOf = "targetOf:",
        GhostHandlerOf = "handlerOf:",
        GhostIsProxy = "isProxy:",
        GhostClassOf = "classOf:",
        GhostIdentical = "is:identicalTo:",
        GhostBecomeWith = "become:with:",
        GhostForwardTo = "forward:to:",
        GhostReferencesTo = "referencesTo:",
        GhostFootprintOf = "footprintOf:",
        GhostFootprintTotal = "footprintTotal",
        GhostExecute = "execute:on:with:",
        GhostSwapOut = "swapOut:",
        GhostSwapOutAll = "swapOutAll:",
        GhostSwapIn = "swapIn:",
        GhostSwapInAll = "swapInAll",
        GhostIsSwapped = "isSwapped:",
        GhostCachedClassProxy = "cachedClassProxyFor:",
        GhostWrap = "wrap:selector:",
        GhostUnwrap = "unwrap:selector:",
        GhostWrapAll = "wrapAll:",
        GhostExecutions = "executionsOf:selector:",
        GhostInterceptions = "interceptions",
        GhostSwapIns = "swapIns",
        GhostSwapOuts = "swapOuts",
        GhostProxyCount = "proxyCount",
        GhostRandom = "random:",
        GhostInstallDnuBaseline = "installDnuBaselineOn:",
    }
    "InterceptionDelegator" {
        CannotInterpret = "cannotInterpret:",
    }
    "MethodLookupInterceptionDelegator" {
        InstanceCannotInterpret = "cannotInterpret:",
    }
    "TargetBasedProxy" {
        ProxyTarget = "proxyTarget",
        ProxyHandler = "proxyHandler",
    }
    "TargetBasedProxy class" {
        CreateProxyFor = "createProxyFor:handler:",
        CreateProxyAndReplace = "createProxyAndReplace:handler:",
    }
    "TargetBasedClassProxy" {
        ClassProxyTarget = "proxyTarget",
        ClassProxyHandler = "proxyHandler",
        ClassProxyFindNilDict = "ghostFindClassWithNilMethodDictInHierarchy",
    }
    "TargetBasedClassProxy class" {
        CreateClassProxyAndReplace = "createProxyAndReplace:handler:",
    }
    "MareaProxy" {
        MareaHandler = "proxyHandler",
        MareaProxyId = "proxyId",
    }
    "MareaClassProxy" {
        MareaClassHandler = "proxyHandler",
        MareaClassProxyId = "proxyId",
        CachedIsBehavior = "isBehavior",
        CachedIsInstanceSide = "isInstanceSide",
        CachedIsClassSide = "isClassSide",
        CachedIsMeta = "isMeta",
        CachedInstanceSide = "instanceSide",
        MareaClassFindNilDict = "ghostFindClassWithNilMethodDictInHierarchy",
    }
    "ProxyHandler" {
        HandleInterception = "handleInterception:",
        EnableDebugging = "enableDebugging",
        ClearSpecialMessages = "clearSpecialMessages",
        SpecialMessagesAtPut = "specialMessagesAt:put:",
        SpecialMessageCount = "specialMessageCount",
        ExecutionCountOf = "executionCountOf:",
    }
}

impl Prim {
    pub fn arity(self) -> usize {
        selector_arity(self.selector())
    }

    pub fn index(self) -> usize {
        Prim::ALL
            .iter()
            .position(|p| *p == self)
            .expect("every primitive is catalogued")
    }

    pub fn from_index(i: usize) -> Option<Prim> {
        Prim::ALL.get(i).copied()
    }
}
